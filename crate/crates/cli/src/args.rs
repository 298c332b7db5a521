use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when neither `--seed` nor `TRACE_SKETCH_SEED` is given.
pub const DEFAULT_SEED: u64 = 0x7472_6163_6521;

#[derive(Debug, Parser)]
#[command(
    name = "trace-sketch",
    version,
    about = "Stochastic trace and log-determinant estimation"
)]
pub struct Cli {
    /// Master seed for probes and random generators.
    #[arg(long, global = true, env = "TRACE_SKETCH_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads for probe evaluation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output format (default: json, csv for `experiment`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate tr(f(A)).
    Trace(TraceArgs),
    /// Sample counts and Lanczos steps from every applicable bound.
    Plan(PlanArgs),
    /// Planned, fixed or adaptive log-determinant estimation.
    Logdet(LogdetArgs),
    /// Data for failure-probability and error curves.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", multiple = false)]
pub struct SourceArgs {
    /// Matrix Market file (coordinate, real or pattern, symmetric).
    #[arg(long)]
    pub matrix: Option<PathBuf>,

    /// Synthetic matrix, e.g. `tightness-gaussian:64`, `random-spd:200:100`,
    /// `lowrank:1000`, `graph:500:0.02`.
    #[arg(long)]
    pub generator: Option<String>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// identity, square, cube, powerK, log or exp.
    #[arg(long = "f", default_value = "identity")]
    pub function: String,

    /// gaussian, rademacher or unit-basis.
    #[arg(long, default_value = "rademacher")]
    pub probes: String,

    /// Number of probes.
    #[arg(long = "N", conflicts_with_all = ["epsilon", "delta"], required_unless_present_all = ["epsilon", "delta"])]
    pub n_samples: Option<usize>,

    /// Absolute accuracy target; plans N together with `--delta`.
    #[arg(long, requires = "delta")]
    pub epsilon: Option<f64>,

    /// Failure probability for the plan.
    #[arg(long, requires = "epsilon")]
    pub delta: Option<f64>,

    /// Lanczos steps for non-polynomial functions.
    #[arg(long)]
    pub m: Option<usize>,

    /// Bracket width for adaptive log quadrature when `--m` is absent.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// identity, square, cube, powerK or log.
    #[arg(long = "f", default_value = "identity")]
    pub function: String,

    #[arg(long)]
    pub epsilon: f64,

    #[arg(long)]
    pub delta: f64,

    /// Dimension when planning from supplied norms.
    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long)]
    pub frobenius: Option<f64>,

    #[arg(long)]
    pub spectral: Option<f64>,

    #[arg(long)]
    pub offdiag_frobenius: Option<f64>,

    #[arg(long)]
    pub offdiag_spectral: Option<f64>,

    #[arg(long)]
    pub trace: Option<f64>,

    /// Nuclear norm for the comparison bounds.
    #[arg(long)]
    pub nuclear: Option<f64>,

    #[arg(long)]
    pub rank: Option<usize>,

    /// Condition number for log-determinant plans.
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LogdetArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[arg(long, default_value = "rademacher")]
    pub probes: String,

    /// Fixed number of probes (requires `--m`).
    #[arg(long = "N", requires = "m", conflicts_with_all = ["epsilon", "delta"], required_unless_present_all = ["epsilon", "delta"])]
    pub n_samples: Option<usize>,

    /// Lanczos steps per probe for a fixed run.
    #[arg(long, requires = "n_samples")]
    pub m: Option<usize>,

    #[arg(long, requires = "delta")]
    pub epsilon: Option<f64>,

    #[arg(long, requires = "epsilon")]
    pub delta: Option<f64>,

    /// Double the sample count until a statistical stopping rule holds.
    #[arg(long, requires = "epsilon")]
    pub adaptive: bool,

    /// Probe budget for adaptive runs.
    #[arg(long, default_value_t = 1 << 16)]
    pub max_n: usize,

    /// Lanczos step cap for adaptive runs.
    #[arg(long)]
    pub max_steps: Option<usize>,

    /// Condition number; skips the dense log-norm computation.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Also compute the Cholesky log-determinant and report the error.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    /// |tr_N(B)| against the envelope on the tightness matrices.
    Envelope,
    /// Failure frequency against the tail bound on the tightness matrices.
    Tail,
    /// P(|tr_N(B)| <= eps) against the lower tightness bound.
    Lower,
    /// Error against N for a given matrix, one block per probe kind.
    Error,
    /// Repeated adaptive log-determinant runs against the Cholesky value.
    Logdet,
    /// Gaussian plan against the nuclear-norm plan.
    Plans,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub kind: ExperimentKind,

    #[command(flatten)]
    pub source: SourceArgs,

    /// Probe kinds, comma separated.
    #[arg(long, default_value = "gaussian")]
    pub probes: String,

    /// Dimensions, comma separated.
    #[arg(long, default_value = "4,16,64,256,1024")]
    pub dims: String,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long = "N", default_value_t = 10)]
    pub n_samples: usize,

    /// Sample counts for `error`, comma separated.
    #[arg(long, default_value = "1,2,4,8,16,32,64,128")]
    pub counts: String,

    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,

    /// Accuracy grid, comma separated.
    #[arg(long, default_value = "1")]
    pub epsilons: String,

    #[arg(long, default_value_t = 1 << 14)]
    pub max_n: usize,
}
