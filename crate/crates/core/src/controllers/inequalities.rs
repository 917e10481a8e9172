//! Numerical forms of the inequalities behind the safe-gain construction.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};
use crate::plant::LinearPlant;

use super::GainMatrix;

/// Checks `zᵀMz - zᵀMy ≥ 0` for inputs meeting its hypotheses:
/// `‖y‖ ≤ ‖z‖`, `Mᵀy = λy`, `λ_min(M + Mᵀ) ≥ λ` and `M + Mᵀ ⪰ 0`.
///
/// The eigenvalue `λ` is recovered from `y`. Inputs that violate a hypothesis
/// are rejected rather than evaluated.
pub fn check_eigen_inequality(m: &Mat2, y: &Vec2, z: &Vec2) -> Result<bool> {
    let scale = m.norm();
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    if y.norm() > z.norm() * (1.0 + 1e-12) {
        return Err(Error::PreconditionViolated("‖y‖ must not exceed ‖z‖".into()));
    }
    let lambda = if y.norm_squared() == 0.0 {
        0.0
    } else {
        y.dot(&(m * y)) / y.norm_squared()
    };
    if (m.transpose() * y - y * lambda).norm() > tol * y.norm() {
        return Err(Error::PreconditionViolated("y is not a left eigenvector of M".into()));
    }
    let sym_min = linalg::lambda_min_sym_sum(m);
    if sym_min < lambda - tol {
        return Err(Error::PreconditionViolated("λ_min(M + Mᵀ) is below λ".into()));
    }
    if sym_min < -tol {
        return Err(Error::PreconditionViolated("M + Mᵀ is not positive semidefinite".into()));
    }
    let value = z.dot(&(m * z)) - z.dot(&(m * y));
    Ok(value >= -1e-10 * z.norm_squared() * scale)
}

/// `c₁² + c₂² + 2(c₁b + c₂d)` for an orthonormal basis `{w₁, w₂}`, where
/// `c₁ = (ζ - γ)ᵀw₁`, `c₂ = (ζ - γ)ᵀw₂`, `b = γᵀw₁`, `d = γᵀw₂`.
///
/// Non-negative whenever `‖ζ‖ ≥ ‖γ‖`.
pub fn orthonormal_basis_margin(w1: &Vec2, w2: &Vec2, zeta: &Vec2, gamma: &Vec2) -> f64 {
    let (a, b) = (zeta.dot(w1), gamma.dot(w1));
    let (c, d) = (zeta.dot(w2), gamma.dot(w2));
    let (c1, c2) = (a - b, c - d);
    c1 * c1 + c2 * c2 + 2.0 * (c1 * b + c2 * d)
}

/// `xᵀĀx - xᵀĀx*` with `Ā = -(A - BK)`: `½ ḣ` under `u = u* - K(x - x*)`.
///
/// Non-negative wherever `‖x‖ ≥ ‖x*‖` when `K` is a safe gain.
pub fn boundary_safety_margin(plant: &LinearPlant, gain: &GainMatrix, x_star: &Vec2, x: &Vec2) -> f64 {
    let a_bar = -gain.closed_loop(plant);
    x.dot(&(a_bar * x)) - x.dot(&(a_bar * x_star))
}
