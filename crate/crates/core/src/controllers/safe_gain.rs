//! Minimum-norm safe linear gain.
//!
//! Requiring `x*` to be a left eigenvector of `N = A - BK` with eigenvalue
//! `λ` fixes `K` as an affine function of `λ`. What remains is a scalar
//! problem: among `λ < 0` with `λ_max(N + Nᵀ) ≤ λ`, pick the one with the
//! smallest `‖K(λ)‖`. The feasible set is an interval and the objective is
//! a convex quadratic in `λ`, so a coarse log-spaced scan, bisection of the
//! interval ends and a clamped quadratic minimiser are enough.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::plant::LinearPlant;

use super::GainMatrix;

/// Strictness margin for `N + Nᵀ ≺ 0`.
pub const CRITERIA_MARGIN: f64 = 1e-8;

/// Magnitudes of the most and least negative `λ` scanned.
pub const LAMBDA_SEARCH_RANGE: (f64, f64) = (1e7, 1e-3);

const GRID_POINTS: usize = 1001;
const BISECTION_STEPS: usize = 80;

/// A safe gain with the quantities that certify it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeGainCertificate {
    pub gain: GainMatrix,
    /// Left eigenvalue of `A - BK` associated with `x*` (1/s).
    pub lambda: f64,
    /// `λ_max((A - BK) + (A - BK)ᵀ)` (1/s).
    pub eig_max: f64,
    /// Relative residual of `(x*)ᵀ(A - BK) = λ (x*)ᵀ`.
    pub eigen_residual: f64,
    pub margin: f64,
}

impl SafeGainCertificate {
    pub fn k_norm(&self) -> f64 {
        self.gain.norm()
    }

    /// Re-checks the three criteria against `plant` and `x_star`.
    pub fn verify(&self, plant: &LinearPlant, x_star: &Vec2) -> bool {
        let n = self.gain.closed_loop(plant);
        let eig_max = linalg::lambda_max_sym_sum(&n);
        eigen_residual(plant, x_star, &self.gain, self.lambda) <= 1e-8
            && eig_max <= self.lambda + 1e-8
            && eig_max <= -self.margin
    }
}

fn eigen_residual(plant: &LinearPlant, x_star: &Vec2, gain: &GainMatrix, lambda: f64) -> f64 {
    let n = gain.closed_loop(plant);
    let lhs = x_star.transpose() * n;
    let rhs = x_star.transpose() * lambda;
    let scale = x_star.norm() * (n.norm() + lambda.abs()).max(f64::MIN_POSITIVE);
    (lhs - rhs).norm() / scale
}

/// The unique `K` with `(x*)ᵀ(A - BK) = λ (x*)ᵀ`.
pub fn safe_gain_from_lambda(plant: &LinearPlant, x_star: &Vec2, lambda: f64) -> Result<GainMatrix> {
    let denom = x_star.dot(&plant.b);
    if !denom.is_finite() || denom.abs() <= 1e-14 * x_star.norm() * plant.b.norm() {
        return Err(Error::DegenerateReference);
    }
    let row = (x_star.transpose() * plant.a - x_star.transpose() * lambda) / denom;
    Ok(GainMatrix(row))
}

struct Search<'a> {
    plant: &'a LinearPlant,
    x_star: &'a Vec2,
}

impl Search<'_> {
    fn gain(&self, lambda: f64) -> GainMatrix {
        // denominator already checked non-zero
        safe_gain_from_lambda(self.plant, self.x_star, lambda).expect("checked reference")
    }

    fn eig_max(&self, lambda: f64) -> f64 {
        linalg::lambda_max_sym_sum(&self.gain(lambda).closed_loop(self.plant))
    }

    fn feasible(&self, lambda: f64) -> bool {
        let e = self.eig_max(lambda);
        e <= lambda && e <= -CRITERIA_MARGIN
    }

    fn objective(&self, lambda: f64) -> f64 {
        self.gain(lambda).norm()
    }

    /// Shrinks `(bad, good)` towards the feasibility boundary, returning a feasible point.
    fn boundary(&self, mut bad: f64, mut good: f64) -> f64 {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (bad + good);
            if self.feasible(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    }

    /// `‖K(λ)‖²` is a convex quadratic in `λ`; its minimiser clamped to `[lo, hi]`.
    fn minimise_norm(&self, lo: f64, hi: f64) -> f64 {
        let denom = self.x_star.dot(&self.plant.b);
        let offset = (self.x_star.transpose() * self.plant.a) / denom;
        let slope = self.x_star.transpose() / denom;
        let unconstrained = offset.dot(&slope) / slope.norm_squared();
        let lambda = unconstrained.clamp(lo, hi);
        if self.feasible(lambda) {
            lambda
        } else if self.objective(lo) <= self.objective(hi) {
            lo
        } else {
            hi
        }
    }
}

/// Minimum-norm `K` satisfying the eigenvector, eigenvalue-bound and
/// strict negative-definiteness criteria for the reference `x_star`.
pub fn synthesize_safe_gain(plant: &LinearPlant, x_star: &Vec2) -> Result<SafeGainCertificate> {
    let (_, hi) = linalg::sym_eigenvalues(&plant.a);
    if hi >= 0.0 {
        return Err(Error::PreconditionViolated("A + Aᵀ must be negative definite".into()));
    }
    if plant.inverse_times_input()?.norm() == 0.0 {
        return Err(Error::ZeroInputDirection);
    }
    safe_gain_from_lambda(plant, x_star, -1.0)?;

    let search = Search { plant, x_star };
    let (far, near) = LAMBDA_SEARCH_RANGE;
    let (log_far, log_near) = (far.log10(), near.log10());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            let t = i as f64 / (GRID_POINTS - 1) as f64;
            -(10f64.powf(log_far + t * (log_near - log_far)))
        })
        .collect();
    let feasible: Vec<bool> = grid.iter().map(|&l| search.feasible(l)).collect();

    let best = (0..GRID_POINTS)
        .filter(|&i| feasible[i])
        .min_by(|&a, &b| search.objective(grid[a]).total_cmp(&search.objective(grid[b])))
        .ok_or(Error::NoFeasibleLambda {
            lo: grid[0],
            hi: grid[GRID_POINTS - 1],
        })?;

    // contiguous feasible run around the best grid point
    let mut first = best;
    while first > 0 && feasible[first - 1] {
        first -= 1;
    }
    let mut last = best;
    while last + 1 < GRID_POINTS && feasible[last + 1] {
        last += 1;
    }
    let lo = if first > 0 {
        search.boundary(grid[first - 1], grid[first])
    } else {
        grid[first]
    };
    let hi = if last + 1 < GRID_POINTS {
        search.boundary(grid[last + 1], grid[last])
    } else {
        grid[last]
    };

    let lambda = search.minimise_norm(lo, hi);
    let gain = search.gain(lambda);
    let eig_max = search.eig_max(lambda);
    Ok(SafeGainCertificate {
        gain,
        lambda,
        eig_max,
        eigen_residual: eigen_residual(plant, x_star, &gain, lambda),
        margin: CRITERIA_MARGIN,
    })
}
