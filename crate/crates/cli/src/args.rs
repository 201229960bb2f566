use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use posthoc_core::evidence::DEFAULT_DELTA;
use posthoc_core::montecarlo::{DEFAULT_TRIALS, DEFAULT_Z_SLACK};

use crate::render::Format;

/// Type-I error of significance levels chosen after seeing the p-value.
///
/// Strategies: `fixed:<a>`, `two:<a1>,<a2>`, `step:<a1>,...,<ak>`, `cont:<C>,<eps>`
/// (`cont:<C>,0` is the untruncated, divergent rule; `exact` only).
#[derive(Debug, Parser)]
#[command(name = "posthoc", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form conditional rates and expected discrepancy ratio
    Exact(ExactArgs),
    /// Monte-Carlo estimate under the null, checked against the closed form
    Simulate(SimulateArgs),
    /// Same strategy on raw z-test p-values and on e-value calibrated p*
    Compare(CompareArgs),
    /// One simulation per grid value of eps, a1 or delta; emits CSV
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format [default: table, csv for sweep]
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write the output to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write a run manifest (command line, config, version, time) to this file
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of simulated studies
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub n: u64,

    /// Seed for every random draw
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads [default: available parallelism]; does not change results
    #[arg(long, env = "POSTHOC_WORKERS")]
    pub workers: Option<usize>,
}

impl RunArgs {
    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvidenceKind {
    /// p uniform on (0, 1]
    Uniform,
    /// one-sided z-test p-value
    Gaussian,
    /// p* = min(1, 1/e) for the likelihood-ratio e-value
    CalibratedE,
}

#[derive(Debug, Args)]
pub struct BinArgs {
    /// Number of geometric bins for the continuum conditional table
    #[arg(long, conflicts_with = "bin_edges")]
    pub bins: Option<usize>,

    /// Explicit comma-separated bin edges for the continuum conditional table
    #[arg(long)]
    pub bin_edges: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Strategy, e.g. two:0.005,0.05
    pub strategy: String,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub strategy: String,

    #[arg(long, value_enum, default_value = "uniform")]
    pub evidence: EvidenceKind,

    /// Alternative mean shift used to build e-values
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,

    #[command(flatten)]
    pub bins: BinArgs,

    #[command(flatten)]
    pub run: RunArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub strategy: String,

    /// Alternative mean shift used to build e-values
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,

    /// Standard errors of slack allowed above 1 before a violation is declared
    #[arg(long, default_value_t = DEFAULT_Z_SLACK)]
    pub z_slack: f64,

    #[command(flatten)]
    pub bins: BinArgs,

    #[command(flatten)]
    pub run: RunArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Eps,
    A1,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Geometric,
    Linear,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,

    /// Base strategy; `cont:...` for eps, `two:...` for a1, any for delta
    #[arg(long)]
    pub strategy: String,

    /// Evidence for the eps and a1 axes
    #[arg(long, value_enum, default_value = "uniform")]
    pub evidence: EvidenceKind,

    /// Design shift for calibrated-e evidence on the eps and a1 axes
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,

    /// Explicit comma-separated grid values
    #[arg(long, conflicts_with_all = ["from", "to", "points"])]
    pub values: Option<String>,

    #[arg(long, requires_all = ["to", "points"])]
    pub from: Option<f64>,

    #[arg(long)]
    pub to: Option<f64>,

    #[arg(long)]
    pub points: Option<usize>,

    #[arg(long, value_enum, default_value = "geometric")]
    pub scale: ScaleArg,

    #[arg(long, default_value_t = DEFAULT_Z_SLACK)]
    pub z_slack: f64,

    #[command(flatten)]
    pub run: RunArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}
