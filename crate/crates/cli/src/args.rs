use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "excursions",
    version,
    about = "Nonintersecting Brownian excursions: distributions, areas, limits"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Write to this file instead of stdout; CSV output also gets a
    /// `<file>.meta.json` sidecar.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Finite,
    Fredholm,
    Painleve,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Matrix,
    Rejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Cdf,
    Joint,
    Areas,
    Histogram,
    Acceptance,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Path density ρ_n(x, τ) on a grid, with a normalization check.
    Density(DensityArgs),
    /// Lowest-path or highest-path distribution function on a grid of s = x/σ(τ).
    Cdf(CdfArgs),
    /// Joint probability at several times.
    Joint(JointArgs),
    /// Expected areas under the lowest and highest paths.
    Areas(AreasArgs),
    /// Limit constants c_L, c_H and the large-n top-area values.
    Constants(ConstantsArgs),
    /// Convergence to the Bessel process under the bottom scaling.
    Limits(LimitsArgs),
    /// Monte Carlo estimates with standard errors.
    Simulate(SimulateArgs),
    /// Doubling gates and cross-method agreement; exits 1 on failure.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Largest x on the grid; default σ(τ)(√(4n) + 4).
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CdfArgs {
    #[arg(long, value_enum, default_value_t = Side::Bottom)]
    pub side: Side,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Finite)]
    pub method: MethodArg,
    /// Comma-separated values of s.
    #[arg(long, conflicts_with = "s_range")]
    pub s: Option<String>,
    /// `start:stop:step` for s (inclusive).
    #[arg(long)]
    pub s_range: Option<String>,
    #[arg(long, default_value_t = excursions::fredholm::DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    /// ODE step tolerance for the Painlevé route.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JointArgs {
    #[arg(long)]
    pub n: usize,
    /// Comma-separated increasing times in (0, 1).
    #[arg(long)]
    pub times: String,
    /// Comma-separated physical thresholds, one per time.
    #[arg(long)]
    pub thresholds: String,
    #[arg(long, value_enum, default_value_t = Side::Bottom)]
    pub kind: Side,
    #[arg(long, default_value_t = excursions::fredholm::DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AreasArgs {
    /// `a..b` or a single n.
    #[arg(default_value = "1..9")]
    pub range: String,
    /// Same as the positional range.
    #[arg(long, conflicts_with = "range")]
    pub n: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    /// Range of n for the large-n top-area values.
    #[arg(long, default_value = "5..9")]
    pub n: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitsArgs {
    #[arg(long, default_value = "8,16,32,64,128")]
    pub n_list: String,
    /// Comma-separated Bessel-process time offsets.
    #[arg(long, default_value = "0")]
    pub times: String,
    /// Comma-separated Bessel-scale thresholds, one per time.
    #[arg(long, default_value = "2")]
    pub thresholds: String,
    /// Excursion time the scaling is centered on.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Side of the square on which kernel errors are measured.
    #[arg(long, default_value_t = 5.0)]
    pub box_size: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub observable: Observable,
    #[arg(long)]
    pub n: usize,
    /// Grid intervals M.
    #[arg(long, default_value_t = excursions::montecarlo::DEFAULT_GRID)]
    pub grid_steps: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Matrix)]
    pub sampler: SamplerArg,
    /// Proposals per ensemble for the rejection sampler.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_attempts: u64,
    /// Samples per RNG stream.
    #[arg(long, default_value_t = excursions::montecarlo::DEFAULT_CHUNK)]
    pub chunk: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Comma-separated times (joint).
    #[arg(long)]
    pub times: Option<String>,
    /// Comma-separated physical thresholds: several at one time for `cdf`,
    /// one per time for `joint`.
    #[arg(long)]
    pub thresholds: Option<String>,
    #[arg(long, value_enum, default_value_t = Side::Bottom)]
    pub kind: Side,
    /// Histogram bins on [0, x_max].
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Also write this many whole ensembles as CSV (path, k, t, position).
    #[arg(long)]
    pub dump: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub dump_count: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelfcheckArgs {
    /// Monte Carlo samples for the grid-doubling gate.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
