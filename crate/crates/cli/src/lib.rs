//! Command-line driver: config resolution, subcommand dispatch and exit codes.

mod args;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::json;

use safecurrent::controllers::riccati_residual;
use safecurrent::experiments::{self, TrajectoryDump};
use safecurrent::{
    simulate, ControlHold, ControllerKind, ControllerSuite, Error, ExperimentConfig,
    ExperimentReport, Inverter, PlantKind, PlantParams, Vec2,
};

pub use args::{Cli, Command, CommonArgs, Controller, Hold, Plant, SingleArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Contents of the `--config` file. Plant keys sit at the top level.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct FileConfig {
    #[serde(flatten)]
    pub plant: PlantParams,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
}

/// Everything a subcommand needs after defaults, file and flags are merged.
#[derive(Debug)]
pub struct Resolved {
    pub inverter: Inverter,
    pub experiment: ExperimentConfig,
    pub out: PathBuf,
    pub dump: bool,
    pub decimate: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            match e {
                Error::Io(io) => Failure::Usage(format!("I/O error: {io}")),
                other => Failure::Usage(other.to_string()),
            }
        }
    }
}

pub fn resolve(common: &CommonArgs) -> Result<Resolved, Error> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| {
                Error::InvalidConfig(format!("cannot parse config file {}: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };

    let mut params = file.plant;
    if let Some(limit) = common.current_limit {
        params.current_limit = limit;
    }
    let inverter = Inverter::new(params)?;

    let mut experiment = ExperimentConfig::for_inverter(&inverter);
    experiment.alpha = common.alpha.or(file.alpha).unwrap_or(experiment.alpha);
    experiment.sim.dt = common.dt.or(file.dt).unwrap_or(experiment.sim.dt);
    experiment.sim.t_end = common.t_end.or(file.t_end).unwrap_or(experiment.sim.t_end);
    experiment.seed = common.seed.or(file.seed).unwrap_or(experiment.seed);
    experiment.n = common.n.or(file.n).unwrap_or(experiment.n);
    experiment.sim.hold = match common.hold {
        Hold::Stage => ControlHold::Stage,
        Hold::Zoh => ControlHold::ZeroOrder,
    };
    experiment.sim.validate()?;

    Ok(Resolved {
        inverter,
        experiment,
        out: common.out.clone(),
        dump: common.dump_trajectories,
        decimate: common.decimate as usize,
    })
}

/// Prints a line, ignoring a closed stdout.
fn emit(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| {
        Failure::Usage(format!("cannot create output directory {}: {e}", dir.display()))
    })?;
    let probe = dir.join(".write-probe");
    File::create(&probe).map_err(|e| {
        Failure::Usage(format!("output directory {} is not writable: {e}", dir.display()))
    })?;
    let _ = fs::remove_file(probe);
    Ok(())
}

fn synthesize(cfg: &Resolved) -> Result<(), Failure> {
    let inv = &cfg.inverter;
    let suite = ControllerSuite::synthesize(inv, &cfg.experiment.sim, cfg.experiment.alpha)?;
    let reference = inv.linear_reference(inv.current_limit())?;
    let out = json!({
        "k_lqr": suite.lqr.gain.entries(),
        "k_safe": suite.safe.gain.entries(),
        "lambda": suite.safe.lambda,
        "certificate": {
            "eig_max": suite.safe.eig_max,
            "eigen_residual": suite.safe.eigen_residual,
            "bound_slack": suite.safe.lambda - suite.safe.eig_max,
            "margin": suite.safe.margin,
            "valid": suite.safe.verify(&inv.linear, &reference.x_star),
        },
        "lqr": {
            "riccati_residual": riccati_residual(&inv.linear, &cfg.experiment.sim.weights, &suite.lqr.p),
            "iterations": suite.lqr.iterations,
            "q": cfg.experiment.sim.weights.q,
            "r": cfg.experiment.sim.weights.r,
        },
        "closed_loop_hurwitz": {
            "lqr": suite.lqr.gain.is_stabilizing(&inv.linear),
            "safe_k": suite.safe.gain.is_stabilizing(&inv.linear),
        },
        "reference": { "x_star": [reference.x_star[0], reference.x_star[1]], "u_star": reference.u_star },
        "params": inv.params,
    });
    emit(&serde_json::to_string_pretty(&out).expect("json values serialize"));
    Ok(())
}

fn single(cfg: &Resolved, args: &SingleArgs) -> Result<(), Failure> {
    let inv = &cfg.inverter;
    let plant = match args.plant {
        Plant::Linear => PlantKind::Linear,
        Plant::Nonlinear => PlantKind::Nonlinear,
    };
    let controller = match args.controller {
        Controller::Lqr => ControllerKind::Lqr,
        Controller::SafeK => ControllerKind::SafeK,
        Controller::Cbf => ControllerKind::Cbf,
    };
    let magnitude = args.magnitude.unwrap_or(inv.current_limit());
    let reference = inv
        .reference(plant, magnitude)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let suite = ControllerSuite::synthesize(inv, &cfg.experiment.sim, cfg.experiment.alpha)?;
    let sim_cfg = cfg.experiment.sim.with_plant(plant);
    let x0 = Vec2::new(args.x0.0, args.x0.1);
    let traj = simulate(inv, &suite.law(controller), x0, &reference, &sim_cfg)?;

    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(format!("single_{controller}_{plant}.csv"));
    let file = File::create(&path)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    traj.write_csv(BufWriter::new(file), cfg.decimate)?;

    let summary = json!({
        "controller": controller,
        "plant": plant,
        "x0": [x0[0], x0[1]],
        "x_star": [reference.x_star[0], reference.x_star[1]],
        "u_star": reference.u_star,
        "cost": traj.cost,
        "max_current": traj.max_current,
        "min_h": traj.min_h,
        "unsafe": traj.is_unsafe,
        "filter_activations": traj.filter_activations(),
        "terminal_error": (traj.final_state() - reference.x_star).norm(),
        "csv": path,
    });
    emit(&serde_json::to_string_pretty(&summary).expect("json values serialize"));
    Ok(())
}

type Sweep = fn(
    &Inverter,
    &ControllerSuite,
    &ExperimentConfig,
    Option<&TrajectoryDump>,
) -> safecurrent::Result<ExperimentReport>;

fn sweep(cfg: &Resolved, name: &str, run: Sweep) -> Result<(), Failure> {
    let dir = cfg.out.join(name);
    ensure_dir(&dir)?;
    let suite = ControllerSuite::synthesize(&cfg.inverter, &cfg.experiment.sim, cfg.experiment.alpha)?;
    let dump = cfg.dump.then(|| TrajectoryDump {
        dir: dir.join("trajectories"),
        decimate: cfg.decimate,
    });
    let report = run(&cfg.inverter, &suite, &cfg.experiment, dump.as_ref())?;
    report.write(&dir)?;
    for a in &report.aggregates {
        emit(&format!(
            "{:<7} {:<9} cases={:<5} mean_cost={:>10.4} unsafe={:<5} max_overshoot={:+.3e}",
            a.controller.as_str(), a.plant.to_string(), a.cases, a.mean_cost, a.unsafe_count, a.max_overshoot
        ));
    }
    emit(&format!("wrote {}", dir.display()));
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli.common)?;
    if cli.common.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global();
    }
    match &cli.command {
        Command::Synthesize => synthesize(&cfg),
        Command::Single(args) => single(&cfg, args),
        Command::BoundarySweep => sweep(&cfg, "boundary", experiments::boundary_sweep),
        Command::RandomSweep => sweep(&cfg, "random", experiments::random_sweep),
        Command::NonlinearCompare => sweep(&cfg, "nonlinear", experiments::nonlinear_compare),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
    }
}
