//! Fixed-step RK4 simulation of the inverter under a feedback law.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controllers::{ControlLaw, LqrWeights};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::plant::{Inverter, PlantKind, PlantParams, Reference};
use crate::safety_filter::BarrierConfig;

/// Relative slack on the current limit before a trajectory counts as unsafe.
pub const UNSAFE_REL_TOL: f64 = 1e-6;

/// How the input is formed inside an integration step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ControlHold {
    /// The law is re-evaluated at every RK4 stage, so the closed loop is
    /// integrated as a single ODE.
    #[default]
    Stage,
    /// The input computed at the start of the step is held for the whole step.
    ZeroOrder,
}

impl fmt::Display for ControlHold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlHold::Stage => "stage",
            ControlHold::ZeroOrder => "zoh",
        })
    }
}

impl FromStr for ControlHold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stage" => Ok(ControlHold::Stage),
            "zoh" | "zero-order" => Ok(ControlHold::ZeroOrder),
            other => Err(Error::InvalidConfig(format!("unknown control hold `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step size (s).
    pub dt: f64,
    /// Final time (s).
    pub t_end: f64,
    pub plant_kind: PlantKind,
    pub hold: ControlHold,
    /// Weights of the tracking cost.
    pub weights: LqrWeights,
}

impl SimConfig {
    /// 10 µs steps over 50 ms on the linear plant.
    pub fn for_params(params: &PlantParams) -> Self {
        Self {
            dt: 1e-5,
            t_end: 50e-3,
            plant_kind: PlantKind::Linear,
            hold: ControlHold::Stage,
            weights: LqrWeights::for_params(params),
        }
    }

    pub fn with_plant(mut self, kind: PlantKind) -> Self {
        self.plant_kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be at least dt, got {}",
                self.t_end
            )));
        }
        self.weights.validate()
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// A simulated run sampled at every step boundary.
///
/// `inputs[i]` is the law evaluated at `states[i]`; the last one is never
/// applied but closes the cost sum at `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec2>,
    pub inputs: Vec<f64>,
    pub h_values: Vec<f64>,
    pub filter_active: Vec<bool>,
    pub relaxed_steps: usize,
    pub cost: f64,
    pub min_h: f64,
    pub max_current: f64,
    pub current_limit: f64,
    #[serde(rename = "unsafe")]
    pub is_unsafe: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> Vec2 {
        *self.states.last().expect("trajectory has at least one sample")
    }

    pub fn filter_activations(&self) -> usize {
        self.filter_active.iter().filter(|a| **a).count()
    }

    /// `max ‖x‖ / I_max - 1`; negative when the run stays strictly inside.
    pub fn overshoot(&self) -> f64 {
        self.max_current / self.current_limit - 1.0
    }

    /// Writes `t,i_d,i_q,delta,h,filter_active`, keeping every `decimate`-th row.
    pub fn write_csv<W: Write>(&self, mut out: W, decimate: usize) -> Result<()> {
        if decimate == 0 {
            return Err(Error::InvalidConfig("decimation factor must be at least 1".into()));
        }
        writeln!(out, "t,i_d,i_q,delta,h,filter_active")?;
        for i in (0..self.len()).step_by(decimate) {
            let x = self.states[i];
            writeln!(
                out,
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{}",
                self.times[i],
                x[0],
                x[1],
                self.inputs[i],
                self.h_values[i],
                u8::from(self.filter_active[i])
            )?;
        }
        Ok(())
    }
}

/// `1000 · Σ dt ((x - x*)ᵀQ(x - x*) + R (u - u*)²)` over every sample.
pub fn trajectory_cost(traj: &Trajectory, weights: &LqrWeights, reference: &Reference) -> f64 {
    let sum: f64 = traj
        .states
        .iter()
        .zip(&traj.inputs)
        .map(|(x, u)| {
            let dx = x - reference.x_star;
            let du = u - reference.u_star;
            dx.dot(&(weights.q * dx)) + weights.r * du * du
        })
        .sum();
    1000.0 * traj.dt * sum
}

/// Largest `‖a(t) - b(t)‖` over the common samples of two runs.
pub fn max_state_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn barrier_for(law: &ControlLaw, inverter: &Inverter) -> BarrierConfig {
    match law {
        ControlLaw::CbfFiltered { barrier, .. } => *barrier,
        _ => BarrierConfig {
            current_limit: inverter.current_limit(),
            alpha: BarrierConfig::DEFAULT_ALPHA,
        },
    }
}

/// Integrates `x0` forward under `law` with classical RK4.
pub fn simulate(
    inverter: &Inverter,
    law: &ControlLaw,
    x0: Vec2,
    reference: &Reference,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(x0[0].is_finite() && x0[1].is_finite()) {
        return Err(Error::NonFiniteState { step: 0 });
    }
    let steps = cfg.steps();
    let dt = cfg.dt;
    let kind = cfg.plant_kind;
    let barrier = barrier_for(law, inverter);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut h_values = Vec::with_capacity(steps + 1);
    let mut filter_active = Vec::with_capacity(steps + 1);
    let mut relaxed_steps = 0;

    let control = |x: &Vec2, step: usize| {
        law.evaluate(&inverter.linear, reference, x).map_err(|e| match e {
            Error::BarrierUnsatisfiable { .. } => Error::BarrierUnsatisfiable { step },
            other => other,
        })
    };

    let mut x = x0;
    for step in 0..=steps {
        let action = control(&x, step)?;
        times.push(step as f64 * dt);
        states.push(x);
        inputs.push(action.u);
        h_values.push(crate::safety_filter::barrier_h(&x, &barrier));
        let filt = action.filter;
        filter_active.push(filt.is_some_and(|f| f.active));
        if filt.is_some_and(|f| f.infeasible_relaxed) {
            relaxed_steps += 1;
        }
        if step == steps {
            break;
        }

        let u0 = action.u;
        let deriv = |y: &Vec2| -> Result<Vec2> {
            let u = match cfg.hold {
                ControlHold::ZeroOrder => u0,
                ControlHold::Stage => control(y, step)?.u,
            };
            Ok(inverter.deriv(kind, y, u))
        };
        let k1 = inverter.deriv(kind, &x, u0);
        let k2 = deriv(&(x + k1 * (0.5 * dt)))?;
        let k3 = deriv(&(x + k2 * (0.5 * dt)))?;
        let k4 = deriv(&(x + k3 * dt))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::NonFiniteState { step: step + 1 });
        }
    }

    let min_h = h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_current = states.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let current_limit = inverter.current_limit();
    let mut traj = Trajectory {
        dt,
        times,
        states,
        inputs,
        h_values,
        filter_active,
        relaxed_steps,
        cost: 0.0,
        min_h,
        max_current,
        current_limit,
        is_unsafe: max_current > current_limit * (1.0 + UNSAFE_REL_TOL),
    };
    traj.cost = trajectory_cost(&traj, &cfg.weights, reference);
    Ok(traj)
}
