//! Current-magnitude safety filtering for grid-forming inverters.
//!
//! A voltage-source inverter behind an RL filter is modelled in the dq frame
//! with the voltage angle as its only input. The crate provides:
//!
//! * [`plant`]: linear and nonlinear dynamics and steady-state references,
//! * [`controllers`]: LQR synthesis, the minimum-norm safe linear gain and
//!   numerical checks of the inequalities that make it safe,
//! * [`safety_filter`]: the closed-form CBF/CLF projection of a nominal input,
//! * [`sim`]: fixed-step RK4 trajectories with cost and safety metrics,
//! * [`experiments`]: seeded batch comparisons of the three controllers.

pub mod controllers;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod plant;
pub mod safety_filter;
pub mod sim;

pub use controllers::{
    feedback_law, lqr_gain, safe_gain_from_lambda, synthesize_safe_gain, ControlLaw,
    ControllerKind, GainMatrix, LqrWeights, SafeGainCertificate,
};
pub use error::{Error, Result};
pub use experiments::{ControllerSuite, ExperimentConfig, ExperimentReport};
pub use linalg::{Mat2, Vec2};
pub use plant::{Inverter, LinearPlant, PlantKind, PlantParams, Reference};
pub use safety_filter::{closed_form_filter, filter_coefficients, BarrierConfig, FilterStep};
pub use sim::{simulate, ControlHold, SimConfig, Trajectory};
