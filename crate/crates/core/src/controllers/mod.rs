//! Linear state-feedback laws: the nominal LQR gain, the safe gain with its
//! eigenvalue certificate, and numerical checks of the supporting inequalities.

mod inequalities;
mod lqr;
mod safe_gain;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use inequalities::{boundary_safety_margin, check_eigen_inequality, orthonormal_basis_margin};
pub use lqr::{lqr_gain, riccati_residual, LqrSolution, LqrWeights};
pub use safe_gain::{
    safe_gain_from_lambda, synthesize_safe_gain, SafeGainCertificate, CRITERIA_MARGIN,
    LAMBDA_SEARCH_RANGE,
};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Row2, Vec2};
use crate::plant::{LinearPlant, Reference};
use crate::safety_filter::{closed_form_filter, filter_coefficients, BarrierConfig, FilterStep};

/// A 1x2 state-feedback gain (rad/A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainMatrix(pub Row2);

impl GainMatrix {
    pub fn new(k_d: f64, k_q: f64) -> Self {
        Self(Row2::new(k_d, k_q))
    }

    pub fn zero() -> Self {
        Self(Row2::zeros())
    }

    pub fn entries(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    /// Spectral norm; for a single row this is the Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `A - B K`.
    pub fn closed_loop(&self, plant: &LinearPlant) -> Mat2 {
        plant.a - plant.b * self.0
    }

    pub fn is_stabilizing(&self, plant: &LinearPlant) -> bool {
        self.is_finite() && linalg::is_hurwitz(&self.closed_loop(plant))
    }

    pub fn apply(&self, x: &Vec2) -> f64 {
        (self.0 * x)[0]
    }
}

/// `u* - K (x - x*)`.
pub fn feedback_law(gain: &GainMatrix, reference: &Reference, x: &Vec2) -> f64 {
    reference.u_star - gain.apply(&(x - reference.x_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Lqr,
    SafeK,
    Cbf,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::SafeK, ControllerKind::Cbf, ControllerKind::Lqr];

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Lqr => "lqr",
            ControllerKind::SafeK => "safe-k",
            ControllerKind::Cbf => "cbf",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lqr" => Ok(ControllerKind::Lqr),
            "safe-k" => Ok(ControllerKind::SafeK),
            "cbf" => Ok(ControllerKind::Cbf),
            other => Err(Error::InvalidConfig(format!("unknown controller `{other}`"))),
        }
    }
}

/// A feedback law around a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    Lqr(GainMatrix),
    SafeGain(GainMatrix),
    /// Nominal linear feedback passed through the closed-form safety filter.
    CbfFiltered {
        nominal: GainMatrix,
        barrier: BarrierConfig,
    },
}

/// One evaluation of a [`ControlLaw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlAction {
    pub u: f64,
    pub filter: Option<FilterStep>,
}

impl ControlLaw {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControlLaw::Lqr(_) => ControllerKind::Lqr,
            ControlLaw::SafeGain(_) => ControllerKind::SafeK,
            ControlLaw::CbfFiltered { .. } => ControllerKind::Cbf,
        }
    }

    /// Evaluates the law at `x`. The safety filter always uses the linear
    /// plant's `f(x) = Ax` and `g(x) = B`, whichever plant is being driven.
    ///
    /// Fails only when the barrier constraint admits no input at all.
    pub fn evaluate(
        &self,
        plant: &LinearPlant,
        reference: &Reference,
        x: &Vec2,
    ) -> Result<ControlAction> {
        match self {
            ControlLaw::Lqr(k) | ControlLaw::SafeGain(k) => Ok(ControlAction {
                u: feedback_law(k, reference, x),
                filter: None,
            }),
            ControlLaw::CbfFiltered { nominal, barrier } => {
                let u_nom = feedback_law(nominal, reference, x);
                let coeffs = filter_coefficients(x, &reference.x_star, plant, barrier);
                if coeffs.a_cbf == 0.0 && coeffs.b_cbf > 0.0 {
                    return Err(Error::BarrierUnsatisfiable { step: 0 });
                }
                let step = closed_form_filter(u_nom, &coeffs);
                Ok(ControlAction {
                    u: step.u_bar,
                    filter: Some(step),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{Inverter, PlantParams};
    use approx::assert_relative_eq;

    #[test]
    fn feedback_law_examples() {
        let r = Reference {
            x_star: Vec2::new(3.56, 3.51),
            u_star: 0.0772,
        };
        let k = GainMatrix::new(0.0009, 0.0099);
        assert_eq!(feedback_law(&k, &r, &r.x_star), r.u_star);
        assert_eq!(feedback_law(&GainMatrix::zero(), &r, &Vec2::new(-4.0, 1.0)), r.u_star);
        let u = feedback_law(&k, &r, &Vec2::zeros());
        assert_relative_eq!(u, 0.0772 + 0.0009 * 3.56 + 0.0099 * 3.51, epsilon = 1e-15);
        assert!((u - 0.1152).abs() < 1e-4);
    }

    #[test]
    fn controller_kind_round_trip() {
        for kind in ControllerKind::ALL {
            assert_eq!(kind.as_str().parse::<ControllerKind>().unwrap(), kind);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn filtered_law_passes_through_at_reference() {
        let inv = Inverter::new(PlantParams::default()).unwrap();
        let r = inv.linear_reference(3.0).unwrap();
        let law = ControlLaw::CbfFiltered {
            nominal: GainMatrix::new(0.0009, 0.0099),
            barrier: BarrierConfig::new(5.0, 1000.0).unwrap(),
        };
        let a = law.evaluate(&inv.linear, &r, &r.x_star).unwrap();
        assert_eq!(a.u, r.u_star);
        assert!(!a.filter.unwrap().active);
        assert_eq!(law.kind(), ControllerKind::Cbf);
    }
}
