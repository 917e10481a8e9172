//! Barrier and Lyapunov functions and the closed-form scalar QP filter.
//!
//! With a scalar input, each affine constraint `a·u ≥ b` or `a·u ≤ b` bounds
//! `u` from one side. The filtered input is the projection of `u_nom` onto
//! the interval formed by the two bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::plant::LinearPlant;

/// Width by which the interval may be inverted before it counts as empty.
pub const EMPTY_INTERVAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    /// Current magnitude limit (ampere).
    pub current_limit: f64,
    /// Linear class-K gain on `h` (1/s).
    pub alpha: f64,
}

impl BarrierConfig {
    pub const DEFAULT_ALPHA: f64 = 1000.0;

    pub fn new(current_limit: f64, alpha: f64) -> Result<Self> {
        if !(current_limit.is_finite() && current_limit > 0.0) {
            return Err(Error::InvalidParameter {
                name: "current_limit",
                value: current_limit,
                reason: "must be finite and positive",
            });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be finite and positive",
            });
        }
        Ok(Self {
            current_limit,
            alpha,
        })
    }
}

/// `h(x) = I_max² - ‖x‖²`; its gradient is `-2x`.
pub fn barrier_h(x: &Vec2, cfg: &BarrierConfig) -> f64 {
    cfg.current_limit * cfg.current_limit - x.norm_squared()
}

/// `V(x) = ‖x - x*‖²`; its gradient is `2(x - x*)`.
pub fn lyapunov_v(x: &Vec2, x_star: &Vec2) -> f64 {
    (x - x_star).norm_squared()
}

/// Coefficients of `a_cbf·u ≥ b_cbf` and `a_clf·u ≤ b_clf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterCoefficients {
    pub a_cbf: f64,
    pub b_cbf: f64,
    pub a_clf: f64,
    pub b_clf: f64,
}

impl FilterCoefficients {
    fn cbf_scale(&self) -> f64 {
        self.a_cbf.abs().max(self.b_cbf.abs()).max(1.0)
    }

    fn clf_scale(&self) -> f64 {
        self.a_clf.abs().max(self.b_clf.abs()).max(1.0)
    }

    /// CBF constraint with relative slack `rel_tol`.
    pub fn cbf_satisfied(&self, u: f64, rel_tol: f64) -> bool {
        self.a_cbf * u >= self.b_cbf - rel_tol * self.cbf_scale()
    }

    /// CLF constraint with relative slack `rel_tol`.
    pub fn clf_satisfied(&self, u: f64, rel_tol: f64) -> bool {
        self.a_clf * u <= self.b_clf + rel_tol * self.clf_scale()
    }
}

pub fn filter_coefficients(
    x: &Vec2,
    x_star: &Vec2,
    plant: &LinearPlant,
    cfg: &BarrierConfig,
) -> FilterCoefficients {
    let f = plant.a * x;
    let grad_h = -2.0 * x;
    let grad_v = 2.0 * (x - x_star);
    FilterCoefficients {
        a_cbf: grad_h.dot(&plant.b),
        b_cbf: -cfg.alpha * barrier_h(x, cfg) - grad_h.dot(&f),
        a_clf: grad_v.dot(&plant.b),
        b_clf: -grad_v.dot(&f),
    }
}

/// Outcome of one filter evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStep {
    pub coefficients: FilterCoefficients,
    pub u_lb: f64,
    pub u_ub: f64,
    pub u_nom: f64,
    pub u_bar: f64,
    pub active: bool,
    /// The two constraints had no common input; the CLF bound was dropped.
    pub infeasible_relaxed: bool,
}

fn cbf_bounds(c: &FilterCoefficients) -> (f64, f64) {
    if c.a_cbf > 0.0 {
        (c.b_cbf / c.a_cbf, f64::INFINITY)
    } else if c.a_cbf < 0.0 {
        (f64::NEG_INFINITY, c.b_cbf / c.a_cbf)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

fn clf_bounds(c: &FilterCoefficients) -> (f64, f64) {
    if c.a_clf > 0.0 {
        (f64::NEG_INFINITY, c.b_clf / c.a_clf)
    } else if c.a_clf < 0.0 {
        (c.b_clf / c.a_clf, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

fn project(u: f64, lb: f64, ub: f64) -> f64 {
    ub.min(u.max(lb))
}

/// Minimally modifies `u_nom` so that both constraints hold.
///
/// If `u_nom` already satisfies both it is returned unchanged. Otherwise it
/// is clamped into `[u_lb, u_ub]`. When that interval is empty the CBF bound
/// takes precedence: the CLF bound is dropped and the step is flagged.
/// A constraint with zero coefficient contributes no bound; if it is violated
/// anyway (`0 ≥ b` false), the step is flagged as relaxed.
pub fn closed_form_filter(u_nom: f64, c: &FilterCoefficients) -> FilterStep {
    let cbf_ok = c.a_cbf * u_nom >= c.b_cbf;
    let clf_ok = c.a_clf * u_nom <= c.b_clf;
    if cbf_ok && clf_ok {
        return FilterStep {
            coefficients: *c,
            u_lb: f64::NEG_INFINITY,
            u_ub: f64::INFINITY,
            u_nom,
            u_bar: u_nom,
            active: false,
            infeasible_relaxed: false,
        };
    }

    let (cbf_lb, cbf_ub) = cbf_bounds(c);
    let (clf_lb, clf_ub) = clf_bounds(c);
    let lb = cbf_lb.max(clf_lb);
    let ub = cbf_ub.min(clf_ub);
    let clf_unsatisfiable = c.a_clf == 0.0 && c.b_clf < 0.0;

    let (u_lb, u_ub, relaxed) = if lb > ub + EMPTY_INTERVAL_TOL {
        (cbf_lb, cbf_ub, true)
    } else {
        (lb, ub, clf_unsatisfiable)
    };
    let u_bar = project(u_nom, u_lb, u_ub);
    FilterStep {
        coefficients: *c,
        u_lb,
        u_ub,
        u_nom,
        u_bar,
        active: u_bar != u_nom,
        infeasible_relaxed: relaxed,
    }
}
