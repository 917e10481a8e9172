use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2};
use crate::plant::{LinearPlant, PlantParams};

use super::GainMatrix;

const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-10;

/// Quadratic state and input weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqrWeights {
    pub q: Mat2,
    pub r: f64,
}

impl LqrWeights {
    pub fn new(q: Mat2, r: f64) -> Result<Self> {
        let w = Self { q, r };
        w.validate()?;
        Ok(w)
    }

    /// `Q = I`, `R = V_nom / (10 L)`.
    pub fn for_params(params: &PlantParams) -> Self {
        Self {
            q: Mat2::identity(),
            r: params.nominal_voltage / (10.0 * params.inductance),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "input weight must be finite and positive",
            });
        }
        let asym = (self.q - self.q.transpose()).norm();
        let (lo, _) = linalg::sym_eigenvalues(&self.q);
        if asym > 1e-12 * self.q.norm() || lo < -1e-12 * self.q.norm() {
            return Err(Error::PreconditionViolated(
                "state weight must be symmetric positive semidefinite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrSolution {
    pub gain: GainMatrix,
    /// Stabilising solution of the Riccati equation.
    pub p: Mat2,
    pub iterations: usize,
    pub residual: f64,
}

/// Frobenius norm of `AᵀP + PA - P B R⁻¹ Bᵀ P + Q`.
pub fn riccati_residual(plant: &LinearPlant, weights: &LqrWeights, p: &Mat2) -> f64 {
    let pb = p * plant.b;
    let r = plant.a.transpose() * p + p * plant.a - pb * pb.transpose() / weights.r + weights.q;
    r.norm()
}

/// Continuous-time LQR gain via Kleinman's Newton iteration.
///
/// Starts from `K = 0`, so the open-loop `A` must be Hurwitz. Each step
/// solves `(A - BK)ᵀP + P(A - BK) = -(Q + KᵀRK)` and updates `K = R⁻¹BᵀP`.
pub fn lqr_gain(plant: &LinearPlant, weights: &LqrWeights) -> Result<LqrSolution> {
    weights.validate()?;
    if !plant.is_controllable() {
        return Err(Error::NotControllable);
    }
    if !linalg::is_hurwitz(&plant.a) {
        return Err(Error::NotStabilizing);
    }

    let tol = TOLERANCE * weights.q.norm().max(f64::MIN_POSITIVE);
    let mut gain = GainMatrix::zero();
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let closed = gain.closed_loop(plant);
        let w = weights.q + gain.0.transpose() * gain.0 * weights.r;
        let p = linalg::solve_lyapunov(&closed, &w).ok_or(Error::NotStabilizing)?;
        gain = GainMatrix((plant.b.transpose() * p) / weights.r);
        residual = riccati_residual(plant, weights, &p);
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            if !gain.is_stabilizing(plant) {
                return Err(Error::NotStabilizing);
            }
            return Ok(LqrSolution {
                gain,
                p,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::RiccatiNotConverged {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
