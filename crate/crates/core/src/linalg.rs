//! Closed-form helpers for 2x2 real matrices.

use nalgebra::{Matrix2, Matrix3, Vector3};

pub type Mat2 = Matrix2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
pub type Row2 = nalgebra::RowVector2<f64>;

/// Eigenvalues `(min, max)` of the symmetric part of `m`.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = (0.5 * (a - d)).hypot(b);
    (mean - radius, mean + radius)
}

/// Largest eigenvalue of `m + mᵀ`.
pub fn lambda_max_sym_sum(m: &Mat2) -> f64 {
    2.0 * sym_eigenvalues(m).1
}

/// Smallest eigenvalue of `m + mᵀ`.
pub fn lambda_min_sym_sum(m: &Mat2) -> f64 {
    2.0 * sym_eigenvalues(m).0
}

/// Hurwitz test for a real 2x2 matrix: both eigenvalues in the open left half-plane.
pub fn is_hurwitz(m: &Mat2) -> bool {
    m.trace() < 0.0 && m.determinant() > 0.0
}

/// Adjugate inverse; `None` when the determinant vanishes relative to the entries.
pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let det = m.determinant();
    let scale = m.abs().max().powi(2);
    if det == 0.0 || det.abs() <= 1e-14 * scale {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

/// Solves `aᵀ P + P a = -w` for symmetric `P`, with `w` symmetric.
///
/// The three unknowns `(p11, p12, p22)` are found from a dense 3x3 system.
pub fn solve_lyapunov(a: &Mat2, w: &Mat2) -> Option<Mat2> {
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    // (aᵀP + Pa)_{11} = 2 a11 p11 + 2 a21 p12
    // (aᵀP + Pa)_{12} = a12 p11 + (a11 + a22) p12 + a21 p22
    // (aᵀP + Pa)_{22} = 2 a12 p12 + 2 a22 p22
    let lhs = Matrix3::new(
        2.0 * a11,
        2.0 * a21,
        0.0,
        a12,
        a11 + a22,
        a21,
        0.0,
        2.0 * a12,
        2.0 * a22,
    );
    let rhs = Vector3::new(-w[(0, 0)], -0.5 * (w[(0, 1)] + w[(1, 0)]), -w[(1, 1)]);
    let p = lhs.lu().solve(&rhs)?;
    Some(Mat2::new(p[0], p[1], p[1], p[2]))
}
