use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "tow-bandit",
    version,
    about = "Tug-of-war two-armed bandit: exact, closed-form and Monte Carlo CDR",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    /// Re-run from the metadata echo of a previous output (JSON file or CSV header).
    #[arg(long, value_name = "FILE")]
    pub params_json: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,

    /// Worker threads for the re-run (0 = all cores).
    #[arg(long, env = "TOW_BANDIT_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Record wall-clock duration in the metadata (makes outputs non-reproducible byte-wise).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// CDR_n for n = 1..steps.
    CdrCurve(CdrCurveArgs),
    /// CDR at a fixed step across a λ grid.
    LambdaSweep(LambdaSweepArgs),
    /// max_λ CDR and its argmax over the (p_a, p_b) grid.
    Heatmap(HeatmapArgs),
    /// Asymptotic CDR on p_a + p_b = 1.
    ClosedForm(ClosedFormArgs),
    /// Monte Carlo trajectories, compared with the exact engine in integer mode.
    Simulate(SimulateArgs),
    /// Stationary distribution of the joint chain.
    Stationary(StationaryArgs),
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::CdrCurve(a) => &a.output,
            Command::LambdaSweep(a) => &a.output,
            Command::Heatmap(a) => &a.output,
            Command::ClosedForm(a) => &a.output,
            Command::Simulate(a) => &a.output,
            Command::Stationary(a) => &a.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut OutputArgs {
        match self {
            Command::CdrCurve(a) => &mut a.output,
            Command::LambdaSweep(a) => &mut a.output,
            Command::Heatmap(a) => &mut a.output,
            Command::ClosedForm(a) => &mut a.output,
            Command::Simulate(a) => &mut a.output,
            Command::Stationary(a) => &mut a.output,
        }
    }

    pub fn jobs_mut(&mut self) -> Option<&mut usize> {
        match self {
            Command::Heatmap(a) => Some(&mut a.jobs),
            Command::Simulate(a) => Some(&mut a.jobs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EnvArgs {
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub p_a: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub p_b: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ChainArgs {
    /// Threshold bound N; thresholds live in [-N, N].
    #[arg(long, default_value_t = 4)]
    pub threshold_bound: usize,
    /// Signal amplitude x, non-integer in (0, N).
    #[arg(long, default_value_t = 3.5, allow_negative_numbers = true)]
    pub x: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CdrCurveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub env: EnvArgs,
    /// Signal autocorrelation λ in [-1, 1).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LambdaGridArgs {
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 0.99, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda_step: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LambdaSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: LambdaGridArgs,
    #[arg(long, default_value_t = 1000)]
    pub at_step: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HeatmapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Spacing of the p_a and p_b levels.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaGridArgs,
    #[arg(long, default_value_t = 1000)]
    pub at_step: usize,
    /// CDR values within this distance of the maximum count as ties.
    #[arg(long, default_value_t = 1e-12)]
    pub tie_tol: f64,
    /// Writes PREFIX.csv (or .json) and, with --svg, PREFIX_max_cdr.svg and PREFIX_lambda_m.svg.
    #[arg(long)]
    #[serde(skip)]
    pub out_prefix: Option<PathBuf>,
    #[arg(long, requires = "out_prefix")]
    #[serde(skip)]
    pub svg: bool,
    #[arg(long, env = "TOW_BANDIT_JOBS", default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClosedFormArgs {
    /// p_a, with p_b = 1 - p.
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Also print the large-N approximation and its difference.
    #[arg(long)]
    pub f_approx: bool,
    /// Exponent of the approximation (defaults to N - [x]).
    #[arg(long)]
    pub m: Option<u32>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Integer,
    Generalized,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Integer)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    /// Comma-separated decisions to report (all when omitted).
    #[arg(long, value_delimiter = ',')]
    pub sample_steps: Vec<usize>,
    #[arg(long, env = "TOW_BANDIT_JOBS", default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Stop once ‖Mπ − π‖₁ falls below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}
