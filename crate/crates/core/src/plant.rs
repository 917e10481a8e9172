//! dq-frame model of a voltage-source inverter behind an RL filter.
//!
//! The state is the filter current `x = (I_d, I_q)` and the input is the
//! inverter voltage angle `δ`. The nonlinear model keeps `cos δ` and `sin δ`;
//! the linear model replaces them with `1` and `δ`, which removes the grid
//! voltage term because the inverter and grid voltage magnitudes are equal.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Physical constants of the inverter and its RL filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Filter resistance (ohm).
    pub resistance: f64,
    /// Filter inductance (henry).
    pub inductance: f64,
    /// Inverter voltage magnitude (volt).
    pub inverter_voltage: f64,
    /// Grid voltage magnitude (volt).
    pub grid_voltage: f64,
    /// Nominal frame frequency (rad/s).
    pub nominal_frequency: f64,
    /// Current magnitude limit (ampere).
    pub current_limit: f64,
    /// Nominal voltage (volt). Used for the default LQR input weight.
    pub nominal_voltage: f64,
    /// Nominal apparent power (volt-ampere).
    pub nominal_power: f64,
    /// Nominal current (ampere).
    pub nominal_current: f64,
}

impl Default for PlantParams {
    /// 1.5 kVA, 120 V inverter with a 1.3 Ω / 3.5 mH filter on a 60 Hz grid.
    fn default() -> Self {
        Self {
            resistance: 1.3,
            inductance: 3.5e-3,
            inverter_voltage: 120.0,
            grid_voltage: 120.0,
            nominal_frequency: 2.0 * std::f64::consts::PI * 60.0,
            current_limit: 5.0,
            nominal_voltage: 120.0,
            nominal_power: 1500.0,
            nominal_current: 4.17,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("inverter_voltage", self.inverter_voltage),
            ("nominal_frequency", self.nominal_frequency),
            ("current_limit", self.current_limit),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and positive",
                });
            }
        }
        let scale = self.inverter_voltage.abs().max(1.0);
        if (self.grid_voltage - self.inverter_voltage).abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter {
                name: "grid_voltage",
                value: self.grid_voltage,
                reason: "must equal inverter_voltage",
            });
        }
        Ok(())
    }

    /// Reads parameters from JSON. Missing keys fall back to the defaults.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let params: Self = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    /// `R / L` (1/s).
    pub fn damping(&self) -> f64 {
        self.resistance / self.inductance
    }

    /// The rotating-frame state matrix `[[-R/L, ω], [-ω, -R/L]]`.
    pub fn state_matrix(&self) -> Mat2 {
        let d = self.damping();
        let w = self.nominal_frequency;
        Mat2::new(-d, w, -w, -d)
    }
}

/// The linearised plant `ẋ = A x + B u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPlant {
    pub a: Mat2,
    pub b: Vec2,
}

impl LinearPlant {
    pub fn from_params(params: &PlantParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            a: params.state_matrix(),
            b: Vec2::new(0.0, params.inverter_voltage / params.inductance),
        })
    }

    /// Builds a plant from arbitrary matrices, used for property sweeps.
    pub fn from_matrices(a: Mat2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn deriv(&self, x: &Vec2, u: f64) -> Vec2 {
        self.a * x + self.b * u
    }

    /// `A⁻¹ B`, or an error when `A` is singular.
    pub fn inverse_times_input(&self) -> Result<Vec2> {
        let inv = linalg::inverse(&self.a).ok_or_else(|| {
            Error::PreconditionViolated("state matrix A is singular".into())
        })?;
        Ok(inv * self.b)
    }

    /// Whether `[B, AB]` has full rank.
    pub fn is_controllable(&self) -> bool {
        let ab = self.a * self.b;
        let det = self.b[0] * ab[1] - self.b[1] * ab[0];
        let scale = self.b.norm() * ab.norm();
        scale > 0.0 && det.abs() > 1e-12 * scale
    }
}

/// Right-hand side of the nonlinear model with `ω = ω_nom` and `E_dq = (E, 0)`.
pub fn nonlinear_deriv(x: &Vec2, delta: f64, params: &PlantParams) -> Vec2 {
    let v = params.inverter_voltage;
    let drive = Vec2::new(v * delta.cos() - params.grid_voltage, v * delta.sin());
    params.state_matrix() * x + drive / params.inductance
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOutput {
    /// Active power (watt).
    pub p: f64,
    /// Reactive power (var).
    pub q: f64,
}

pub fn power_output(x: &Vec2, delta: f64, voltage: f64) -> PowerOutput {
    let (s, c) = delta.sin_cos();
    PowerOutput {
        p: 1.5 * (voltage * c * x[0] + voltage * s * x[1]),
        q: 1.5 * (voltage * s * x[0] - voltage * c * x[1]),
    }
}

/// A steady-state operating point `(x*, u*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x_star: Vec2,
    pub u_star: f64,
}

impl Reference {
    pub fn zero() -> Self {
        Self {
            x_star: Vec2::zeros(),
            u_star: 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.x_star.norm()
    }

    /// Relative residual of `A x* + B u* = 0` on the linear plant.
    pub fn linear_residual(&self, plant: &LinearPlant) -> f64 {
        let r = plant.deriv(&self.x_star, self.u_star).norm();
        let scale = (plant.a * self.x_star).norm() + (plant.b * self.u_star).norm();
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }
}

/// Equilibrium of the linear plant with `‖x*‖ = |magnitude|`.
///
/// The reference lies on the line spanned by `-A⁻¹B`; the sign of `magnitude`
/// selects the sign of `u*`.
pub fn solve_linear_reference(
    magnitude: f64,
    plant: &LinearPlant,
    current_limit: f64,
) -> Result<Reference> {
    if !magnitude.is_finite() || magnitude.abs() > current_limit * (1.0 + 1e-12) {
        return Err(Error::MagnitudeOutOfRange {
            requested: magnitude,
            max: current_limit,
        });
    }
    let direction = -plant.inverse_times_input()?;
    let gain = direction.norm();
    if gain == 0.0 {
        return Err(Error::ZeroInputDirection);
    }
    let u_star = magnitude / gain;
    Ok(Reference {
        x_star: direction * u_star,
        u_star,
    })
}

/// Steady-state current of the nonlinear model at a fixed angle.
pub fn nonlinear_steady_state(delta: f64, params: &PlantParams) -> Result<Vec2> {
    let inv = linalg::inverse(&params.state_matrix())
        .ok_or_else(|| Error::PreconditionViolated("state matrix A is singular".into()))?;
    let v = params.inverter_voltage;
    let drive = Vec2::new(v * delta.cos() - params.grid_voltage, v * delta.sin());
    Ok(-(inv * drive) / params.inductance)
}

const NONLINEAR_BRACKET: (f64, f64) = (0.0, std::f64::consts::FRAC_PI_2);
const NONLINEAR_TOL: f64 = 1e-9;
const NONLINEAR_MAX_ITER: usize = 200;

/// Equilibrium of the nonlinear plant with `‖x*‖ = magnitude`, found by
/// bisection on `δ ∈ [0, π/2]`, where the steady-state magnitude is monotone.
pub fn solve_nonlinear_reference(magnitude: f64, params: &PlantParams) -> Result<Reference> {
    params.validate()?;
    let (mut lo, mut hi) = NONLINEAR_BRACKET;
    let reach = nonlinear_steady_state(hi, params)?.norm();
    if !magnitude.is_finite()
        || magnitude < 0.0
        || magnitude > params.current_limit * (1.0 + 1e-12)
        || magnitude > reach
    {
        return Err(Error::MagnitudeOutOfRange {
            requested: magnitude,
            max: params.current_limit.min(reach),
        });
    }
    if magnitude == 0.0 {
        return Ok(Reference::zero());
    }

    let mut delta = 0.5 * (lo + hi);
    for _ in 0..NONLINEAR_MAX_ITER {
        delta = 0.5 * (lo + hi);
        let err = nonlinear_steady_state(delta, params)?.norm() - magnitude;
        if err.abs() <= NONLINEAR_TOL {
            break;
        }
        if err < 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
    }
    Ok(Reference {
        x_star: nonlinear_steady_state(delta, params)?,
        u_star: delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantKind {
    Linear,
    Nonlinear,
}

impl fmt::Display for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlantKind::Linear => "linear",
            PlantKind::Nonlinear => "nonlinear",
        })
    }
}

impl FromStr for PlantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PlantKind::Linear),
            "nonlinear" => Ok(PlantKind::Nonlinear),
            other => Err(Error::InvalidConfig(format!("unknown plant kind `{other}`"))),
        }
    }
}

/// Parameters together with the linear plant derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverter {
    pub params: PlantParams,
    pub linear: LinearPlant,
}

impl Inverter {
    pub fn new(params: PlantParams) -> Result<Self> {
        Ok(Self {
            linear: LinearPlant::from_params(&params)?,
            params,
        })
    }

    pub fn current_limit(&self) -> f64 {
        self.params.current_limit
    }

    pub fn deriv(&self, kind: PlantKind, x: &Vec2, u: f64) -> Vec2 {
        match kind {
            PlantKind::Linear => self.linear.deriv(x, u),
            PlantKind::Nonlinear => nonlinear_deriv(x, u, &self.params),
        }
    }

    pub fn linear_reference(&self, magnitude: f64) -> Result<Reference> {
        solve_linear_reference(magnitude, &self.linear, self.params.current_limit)
    }

    pub fn nonlinear_reference(&self, magnitude: f64) -> Result<Reference> {
        solve_nonlinear_reference(magnitude, &self.params)
    }

    pub fn reference(&self, kind: PlantKind, magnitude: f64) -> Result<Reference> {
        match kind {
            PlantKind::Linear => self.linear_reference(magnitude),
            PlantKind::Nonlinear => self.nonlinear_reference(magnitude),
        }
    }
}
