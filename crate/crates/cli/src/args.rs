use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Current-limiting safety filter toolkit for grid-forming inverters.
///
/// Settings are resolved in this order, later winning: built-in defaults
/// (1.3 Ω, 3.5 mH, 120 V, 60 Hz, 5 A limit, α = 1000 1/s, dt = 10 µs,
/// t_end = 50 ms, n = 1000), then the `--config` JSON file, then flags.
#[derive(Debug, Parser)]
#[command(name = "safecurrent", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file with plant parameters (resistance [ohm], inductance [H],
    /// inverter_voltage [V], grid_voltage [V], nominal_frequency [rad/s],
    /// current_limit [A], nominal_voltage [V], nominal_power [VA],
    /// nominal_current [A]) and optional alpha, dt, t_end, seed, n.
    #[arg(long = "config", visible_alias = "params", global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory; nothing is written outside it.
    #[arg(long, global = true, value_name = "DIR", default_value = "results")]
    pub out: PathBuf,

    /// Seed for the random sweep [64-bit integer].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Number of random-sweep cases [count].
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Integration step [s].
    #[arg(long, global = true, value_name = "SECONDS")]
    pub dt: Option<f64>,

    /// Simulated horizon [s].
    #[arg(long = "t-end", global = true, value_name = "SECONDS")]
    pub t_end: Option<f64>,

    /// Barrier decay rate α [1/s].
    #[arg(long, global = true, value_name = "PER_SECOND")]
    pub alpha: Option<f64>,

    /// Current magnitude limit |I|max [A]; overrides the config file.
    #[arg(long = "current-limit", global = true, value_name = "AMPERE")]
    pub current_limit: Option<f64>,

    /// How the input is held inside an integration step [stage: re-evaluated
    /// at every RK4 stage; zoh: held from the step start].
    #[arg(long, global = true, value_enum, default_value_t = Hold::Stage)]
    pub hold: Hold,

    /// Also write one trajectory CSV per simulated case [flag].
    #[arg(long = "dump-trajectories", global = true)]
    pub dump_trajectories: bool,

    /// Keep every k-th sample in trajectory CSVs [count >= 1].
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,

    /// Worker threads for sweeps [count; 0 = all cores]. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the LQR gain, the safe gain and its certificate as JSON.
    Synthesize,
    /// Simulate one trajectory and write it as CSV.
    Single(SingleArgs),
    /// All controllers from 100 initial conditions on the current-limit circle.
    BoundarySweep,
    /// All controllers on randomly sampled initial conditions and references.
    RandomSweep,
    /// The filtered law on the linear and nonlinear plants from the boundary set.
    NonlinearCompare,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    /// Controller to simulate.
    #[arg(long, value_enum, default_value_t = Controller::Cbf)]
    pub controller: Controller,

    /// Initial current `i_d,i_q` [A].
    #[arg(long, value_name = "A,A", value_parser = parse_pair, allow_hyphen_values = true)]
    pub x0: (f64, f64),

    /// Signed reference magnitude [A]; negative flips the sign of u*.
    #[arg(long, value_name = "AMPERE", allow_hyphen_values = true)]
    pub magnitude: Option<f64>,

    /// Plant to drive.
    #[arg(long, value_enum, default_value_t = Plant::Linear)]
    pub plant: Plant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Controller {
    Lqr,
    SafeK,
    Cbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plant {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Hold {
    Stage,
    Zoh,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got `{s}`"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("`{t}` is not finite")) })
    };
    Ok((parse(a)?, parse(b)?))
}
