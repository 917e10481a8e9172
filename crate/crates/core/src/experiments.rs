//! Batch experiments over initial conditions and references.
//!
//! Three suites are provided: initial conditions on the current-limit
//! circle, randomly sampled initial conditions and references, and the same
//! filtered law driving the linear and the nonlinear plant. Cases are
//! independent and run in parallel; records are kept in case order so that
//! reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    lqr_gain, synthesize_safe_gain, ControlLaw, ControllerKind, LqrSolution, SafeGainCertificate,
};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::plant::{Inverter, PlantKind, Reference};
use crate::safety_filter::BarrierConfig;
use crate::sim::{max_state_deviation, simulate, SimConfig, Trajectory};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_RANDOM_CASES: usize = 1000;
pub const BOUNDARY_CASES: usize = 100;

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("linspace needs n >= 2, got {n}")));
    }
    let span = b - a;
    let last = (n - 1) as f64;
    Ok((0..n).map(|i| a + i as f64 / last * span).collect())
}

/// Initial conditions `(I_max sin φ, I_max cos φ)` for `n` angles covering the circle.
pub fn boundary_initial_conditions(current_limit: f64, n: usize) -> Result<Vec<Vec2>> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    Ok(linspace(0.0, 2.0 * std::f64::consts::PI - step, n)?
        .into_iter()
        .map(|phi| Vec2::new(current_limit * phi.sin(), current_limit * phi.cos()))
        .collect())
}

/// The three controllers compared in every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSuite {
    pub lqr: LqrSolution,
    /// Certificate for the reference direction at full current.
    pub safe: SafeGainCertificate,
    pub barrier: BarrierConfig,
}

impl ControllerSuite {
    /// Synthesises the LQR gain from `cfg.weights` and the safe gain for the
    /// linear reference at the current limit.
    ///
    /// The safe gain depends only on the direction of `x*`, which is the same
    /// for every linear reference, so one gain serves all of them.
    pub fn synthesize(inverter: &Inverter, cfg: &SimConfig, alpha: f64) -> Result<Self> {
        let lqr = lqr_gain(&inverter.linear, &cfg.weights)?;
        let x_star = inverter.linear_reference(inverter.current_limit())?.x_star;
        let safe = synthesize_safe_gain(&inverter.linear, &x_star)?;
        let barrier = BarrierConfig::new(inverter.current_limit(), alpha)?;
        Ok(Self { lqr, safe, barrier })
    }

    pub fn law(&self, kind: ControllerKind) -> ControlLaw {
        match kind {
            ControllerKind::Lqr => ControlLaw::Lqr(self.lqr.gain),
            ControllerKind::SafeK => ControlLaw::SafeGain(self.safe.gain),
            ControllerKind::Cbf => ControlLaw::CbfFiltered {
                nominal: self.lqr.gain,
                barrier: self.barrier,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub alpha: f64,
    pub seed: u64,
    /// Number of random cases.
    pub n: usize,
}

impl ExperimentConfig {
    pub fn for_inverter(inverter: &Inverter) -> Self {
        Self {
            sim: SimConfig::for_params(&inverter.params),
            alpha: BarrierConfig::DEFAULT_ALPHA,
            seed: DEFAULT_SEED,
            n: DEFAULT_RANDOM_CASES,
        }
    }
}

/// Optional per-case trajectory export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDump {
    pub dir: PathBuf,
    pub decimate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case: usize,
    pub controller: ControllerKind,
    pub plant: PlantKind,
    pub x0: [f64; 2],
    pub x_star: [f64; 2],
    pub u_star: f64,
    pub cost: f64,
    #[serde(rename = "unsafe")]
    pub is_unsafe: bool,
    pub min_h: f64,
    pub max_current: f64,
    pub overshoot: f64,
    pub terminal_error: f64,
    pub filter_activations: usize,
    pub relaxed_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub controller: ControllerKind,
    pub plant: PlantKind,
    pub cases: usize,
    pub mean_cost: f64,
    pub unsafe_count: usize,
    pub max_overshoot: f64,
    pub max_terminal_error: f64,
}

/// Linear-versus-nonlinear comparison of one initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantComparison {
    pub case: usize,
    pub max_deviation: f64,
    pub linear_overshoot: f64,
    pub nonlinear_overshoot: f64,
    pub linear_terminal_error: f64,
    pub nonlinear_terminal_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub k_lqr: [f64; 2],
    pub k_safe: [f64; 2],
    pub aggregates: Vec<Aggregate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparisons: Vec<PlantComparison>,
    #[serde(skip)]
    pub records: Vec<CaseRecord>,
}

impl ExperimentReport {
    pub fn aggregate(&self, controller: ControllerKind, plant: PlantKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.controller == controller && a.plant == plant)
    }

    pub fn records_for(
        &self,
        controller: ControllerKind,
        plant: PlantKind,
    ) -> impl Iterator<Item = &CaseRecord> {
        self.records
            .iter()
            .filter(move |r| r.controller == controller && r.plant == plant)
    }

    /// Writes `summary.json` and `cases.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut summary = serde_json::to_string_pretty(self)?;
        summary.push('\n');
        fs::write(dir.join("summary.json"), summary)?;

        let mut out = BufWriter::new(File::create(dir.join("cases.csv"))?);
        writeln!(
            out,
            "case,controller,plant,x0_d,x0_q,x_star_d,x_star_q,u_star,cost,unsafe,min_h,max_current,overshoot,terminal_error,filter_activations,relaxed_steps"
        )?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{},{:.8e},{:.8e},{:.8e},{:.8e},{},{}",
                r.case,
                r.controller,
                r.plant,
                r.x0[0],
                r.x0[1],
                r.x_star[0],
                r.x_star[1],
                r.u_star,
                r.cost,
                u8::from(r.is_unsafe),
                r.min_h,
                r.max_current,
                r.overshoot,
                r.terminal_error,
                r.filter_activations,
                r.relaxed_steps
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One simulation to run.
#[derive(Debug, Clone, Copy)]
struct Case {
    index: usize,
    controller: ControllerKind,
    plant: PlantKind,
    x0: Vec2,
    reference: Reference,
}

fn record(case: &Case, traj: &Trajectory) -> CaseRecord {
    CaseRecord {
        case: case.index,
        controller: case.controller,
        plant: case.plant,
        x0: [case.x0[0], case.x0[1]],
        x_star: [case.reference.x_star[0], case.reference.x_star[1]],
        u_star: case.reference.u_star,
        cost: traj.cost,
        is_unsafe: traj.is_unsafe,
        min_h: traj.min_h,
        max_current: traj.max_current,
        overshoot: traj.overshoot(),
        terminal_error: (traj.final_state() - case.reference.x_star).norm(),
        filter_activations: traj.filter_activations(),
        relaxed_steps: traj.relaxed_steps,
    }
}

fn run_case(
    inverter: &Inverter,
    suite: &ControllerSuite,
    cfg: &SimConfig,
    case: &Case,
    dump: Option<&TrajectoryDump>,
) -> Result<(CaseRecord, Trajectory)> {
    let sim_cfg = cfg.with_plant(case.plant);
    let law = suite.law(case.controller);
    let traj = simulate(inverter, &law, case.x0, &case.reference, &sim_cfg)?;
    if let Some(dump) = dump {
        let name = format!("case{:04}_{}_{}.csv", case.index, case.controller, case.plant);
        let file = BufWriter::new(File::create(dump.dir.join(name))?);
        traj.write_csv(file, dump.decimate)?;
    }
    Ok((record(case, &traj), traj))
}

fn run_all(
    inverter: &Inverter,
    suite: &ControllerSuite,
    cfg: &SimConfig,
    cases: &[Case],
    dump: Option<&TrajectoryDump>,
) -> Result<Vec<CaseRecord>> {
    if let Some(dump) = dump {
        fs::create_dir_all(&dump.dir)?;
    }
    cases
        .par_iter()
        .map(|c| run_case(inverter, suite, cfg, c, dump).map(|(r, _)| r))
        .collect()
}

/// Per controller and plant, in a fixed order.
pub fn aggregate(records: &[CaseRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(PlantKind, ControllerKind), Vec<&CaseRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.plant, r.controller)).or_default().push(r);
    }
    let order = |k: &ControllerKind| ControllerKind::ALL.iter().position(|c| c == k);
    let mut out: Vec<Aggregate> = groups
        .into_iter()
        .map(|((plant, controller), rs)| Aggregate {
            controller,
            plant,
            cases: rs.len(),
            mean_cost: rs.iter().map(|r| r.cost).sum::<f64>() / rs.len() as f64,
            unsafe_count: rs.iter().filter(|r| r.is_unsafe).count(),
            max_overshoot: rs.iter().map(|r| r.overshoot).fold(f64::NEG_INFINITY, f64::max),
            max_terminal_error: rs.iter().map(|r| r.terminal_error).fold(0.0, f64::max),
        })
        .collect();
    out.sort_by_key(|a| (a.plant as u8, order(&a.controller)));
    out
}

fn report(
    name: &str,
    seed: Option<u64>,
    cfg: &ExperimentConfig,
    suite: &ControllerSuite,
    records: Vec<CaseRecord>,
    comparisons: Vec<PlantComparison>,
) -> ExperimentReport {
    ExperimentReport {
        experiment: name.to_string(),
        seed,
        config: cfg.clone(),
        k_lqr: suite.lqr.gain.entries(),
        k_safe: suite.safe.gain.entries(),
        aggregates: aggregate(&records),
        comparisons,
        records,
    }
}

/// Every controller from 100 points on the current-limit circle towards the
/// linear reference at full current.
pub fn boundary_sweep(
    inverter: &Inverter,
    suite: &ControllerSuite,
    cfg: &ExperimentConfig,
    dump: Option<&TrajectoryDump>,
) -> Result<ExperimentReport> {
    let reference = inverter.linear_reference(inverter.current_limit())?;
    let x0s = boundary_initial_conditions(inverter.current_limit(), BOUNDARY_CASES)?;
    let cases: Vec<Case> = x0s
        .iter()
        .enumerate()
        .flat_map(|(index, &x0)| {
            ControllerKind::ALL.into_iter().map(move |controller| Case {
                index,
                controller,
                plant: PlantKind::Linear,
                x0,
                reference,
            })
        })
        .collect();
    let records = run_all(inverter, suite, &cfg.sim, &cases, dump)?;
    Ok(report("boundary", None, cfg, suite, records, Vec::new()))
}

/// Draws `(x0, x*)` pairs: `x*` from a signed magnitude uniform on
/// `[-I_max, I_max]`, `x0` with radius uniform on `[0, I_max]` and angle
/// uniform on `[0, 2π)`.
pub fn sample_random_cases(
    inverter: &Inverter,
    n: usize,
    seed: u64,
) -> Result<Vec<(Vec2, Reference)>> {
    let i_max = inverter.current_limit();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let magnitude = -i_max + 2.0 * i_max * rng.random::<f64>();
            let r0 = i_max * rng.random::<f64>();
            let phi0 = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            let reference = inverter.linear_reference(magnitude)?;
            Ok((Vec2::new(r0 * phi0.cos(), r0 * phi0.sin()), reference))
        })
        .collect()
}

pub fn random_sweep(
    inverter: &Inverter,
    suite: &ControllerSuite,
    cfg: &ExperimentConfig,
    dump: Option<&TrajectoryDump>,
) -> Result<ExperimentReport> {
    if cfg.n == 0 {
        return Err(Error::InvalidConfig("random sweep needs at least one case".into()));
    }
    let samples = sample_random_cases(inverter, cfg.n, cfg.seed)?;
    let cases: Vec<Case> = samples
        .iter()
        .enumerate()
        .flat_map(|(index, &(x0, reference))| {
            ControllerKind::ALL.into_iter().map(move |controller| Case {
                index,
                controller,
                plant: PlantKind::Linear,
                x0,
                reference,
            })
        })
        .collect();
    let records = run_all(inverter, suite, &cfg.sim, &cases, dump)?;
    Ok(report("random", Some(cfg.seed), cfg, suite, records, Vec::new()))
}

/// The filtered LQR law, designed on the linear plant, driving both plants
/// from the boundary initial conditions. Each plant tracks its own
/// full-current reference.
pub fn nonlinear_compare(
    inverter: &Inverter,
    suite: &ControllerSuite,
    cfg: &ExperimentConfig,
    dump: Option<&TrajectoryDump>,
) -> Result<ExperimentReport> {
    let linear_ref = inverter.linear_reference(inverter.current_limit())?;
    let nonlinear_ref = inverter.nonlinear_reference(inverter.current_limit())?;
    let x0s = boundary_initial_conditions(inverter.current_limit(), BOUNDARY_CASES)?;
    if let Some(dump) = dump {
        fs::create_dir_all(&dump.dir)?;
    }

    let pairs: Vec<(CaseRecord, CaseRecord, PlantComparison)> = x0s
        .par_iter()
        .enumerate()
        .map(|(index, &x0)| {
            let case = |plant, reference| Case {
                index,
                controller: ControllerKind::Cbf,
                plant,
                x0,
                reference,
            };
            let lin_case = case(PlantKind::Linear, linear_ref);
            let nl_case = case(PlantKind::Nonlinear, nonlinear_ref);
            let (lin, lin_traj) = run_case(inverter, suite, &cfg.sim, &lin_case, dump)?;
            let (nl, nl_traj) = run_case(inverter, suite, &cfg.sim, &nl_case, dump)?;
            let cmp = PlantComparison {
                case: index,
                max_deviation: max_state_deviation(&lin_traj, &nl_traj),
                linear_overshoot: lin.overshoot,
                nonlinear_overshoot: nl.overshoot,
                linear_terminal_error: lin.terminal_error,
                nonlinear_terminal_error: nl.terminal_error,
            };
            Ok((lin, nl, cmp))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(2 * pairs.len());
    let mut comparisons = Vec::with_capacity(pairs.len());
    for (lin, nl, cmp) in pairs {
        records.push(lin);
        records.push(nl);
        comparisons.push(cmp);
    }
    Ok(report("nonlinear", None, cfg, suite, records, comparisons))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantParams;

    #[test]
    fn linspace_examples() {
        assert_eq!(linspace(0.0, 1.0, 2).unwrap(), vec![0.0, 1.0]);
        let two_pi = 2.0 * std::f64::consts::PI;
        let v = linspace(0.0, two_pi - two_pi / 100.0, 100).unwrap();
        assert_eq!(v.len(), 100);
        assert_eq!(v[0], 0.0);
        assert!((v[99] - two_pi * 99.0 / 100.0).abs() < 1e-12);
        for w in v.windows(2) {
            assert!((w[1] - w[0] - two_pi / 100.0).abs() < 1e-12);
            assert!(w[1] > w[0]);
        }
        assert!(linspace(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn boundary_points_lie_on_circle() {
        let pts = boundary_initial_conditions(5.0, 100).unwrap();
        assert_eq!(pts[0], Vec2::new(0.0, 5.0));
        assert!(pts.iter().all(|p| (p.norm() - 5.0).abs() < 1e-12));
    }

    #[test]
    fn random_samples_are_reproducible_and_in_range() {
        let inv = Inverter::new(PlantParams::default()).unwrap();
        let a = sample_random_cases(&inv, 200, 7).unwrap();
        let b = sample_random_cases(&inv, 200, 7).unwrap();
        let c = sample_random_cases(&inv, 200, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (x0, r) in &a {
            assert!(x0.norm() <= 5.0);
            assert!(r.magnitude() <= 5.0 + 1e-12);
            assert!(r.linear_residual(&inv.linear) <= 1e-10);
        }
        assert!(a.iter().any(|(_, r)| r.u_star < 0.0));
        assert!(a.iter().any(|(_, r)| r.u_star > 0.0));
    }

    #[test]
    fn aggregates_match_records() {
        let mk = |case, controller, cost, is_unsafe| CaseRecord {
            case,
            controller,
            plant: PlantKind::Linear,
            x0: [0.0; 2],
            x_star: [0.0; 2],
            u_star: 0.0,
            cost,
            is_unsafe,
            min_h: 0.0,
            max_current: 0.0,
            overshoot: -1.0,
            terminal_error: 0.0,
            filter_activations: 0,
            relaxed_steps: 0,
        };
        let recs = vec![
            mk(0, ControllerKind::Lqr, 1.0, true),
            mk(1, ControllerKind::Lqr, 2.0, false),
            mk(0, ControllerKind::Cbf, 4.0, false),
        ];
        let agg = aggregate(&recs);
        assert_eq!(agg[0].controller, ControllerKind::Cbf);
        assert_eq!(agg[1].controller, ControllerKind::Lqr);
        assert_eq!(agg[1].mean_cost, 1.5);
        assert_eq!(agg[1].unsafe_count, 1);
        assert_eq!(agg[0].cases, 1);
    }
}
