use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "pdsort",
    version,
    about = "Exact and PDE-based approximate non-dominated sorting"
)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism. PD_THREADS overrides.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for the run manifest; defaults to the primary output's directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact Pareto depths of a point set.
    SortExact(SortExactArgs),
    /// Solve the upwind scheme for a builtin or gridded density.
    SolvePde(SolvePdeArgs),
    /// Histogram density estimate from a random subsample.
    EstimateDensity(EstimateDensityArgs),
    /// Approximate Pareto depths from a subsample.
    RankApprox(RankApproxArgs),
    /// Pairwise agreement between two rankings.
    EvalAccuracy(EvalAccuracyArgs),
    /// Convergence-rate and accuracy experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SortExact(_) => "sort-exact",
            Self::SolvePde(_) => "solve-pde",
            Self::EstimateDensity(_) => "estimate-density",
            Self::RankApprox(_) => "rank-approx",
            Self::EvalAccuracy(_) => "eval-accuracy",
            Self::Experiment(ExperimentCommand::PdeRate(_)) => "experiment-pde-rate",
            Self::Experiment(ExperimentCommand::StochasticRate(_)) => "experiment-stochastic-rate",
            Self::Experiment(ExperimentCommand::RankingAccuracy(_)) => {
                "experiment-ranking-accuracy"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortMethodArg {
    Auto,
    BruteForce,
    Fast2d,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeMethodArg {
    ClosedForm2d,
    Bisection,
    Newton,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMethodArg {
    Pde,
    Subset,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HRuleArg {
    Explicit,
    Equalize,
}

#[derive(Debug, Args, Serialize)]
pub struct SortExactArgs {
    /// Points, one comma-separated row per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Depths, one per line.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: SortMethodArg,
}

#[derive(Debug, Args, Serialize)]
pub struct NodeSolveArgs {
    #[arg(long = "node-method", value_enum, default_value = "bisection")]
    pub node_method: NodeMethodArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SolvePdeArgs {
    /// `builtin:f1`..`builtin:f4`, or a gridded density in binary format.
    #[arg(long)]
    pub density: String,
    /// Cells per axis, one entry per dimension (builtin densities only).
    #[arg(long)]
    pub grid: Option<String>,
    /// Box `lo..hi` on every axis (builtin densities only); defaults to 0..1.
    #[arg(long)]
    pub domain: Option<String>,
    /// Solution field in binary format.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the solution as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub node: NodeSolveArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateDensityArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Cells per axis, one entry per dimension.
    #[arg(long)]
    pub grid: String,
    /// Box `lo..hi` on every axis; fitted to the points when omitted.
    #[arg(long)]
    pub domain: Option<String>,
    /// Subsample size; defaults to every point.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RankApproxArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Cells per axis. With `--h-rule equalize` only the box is kept.
    #[arg(long)]
    pub grid: String,
    /// Box `lo..hi` on every axis; fitted to the points when omitted.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub k: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "pde")]
    pub method: RankMethodArg,
    #[arg(long = "h-rule", value_enum, default_value = "explicit")]
    pub h_rule: HRuleArg,
    #[command(flatten)]
    pub node: NodeSolveArgs,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalAccuracyArgs {
    #[arg(long)]
    pub ranks_a: PathBuf,
    #[arg(long)]
    pub ranks_b: PathBuf,
    /// Pairs per Monte Carlo estimate; the exact O(n²) value is computed when omitted.
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentCommand {
    /// Error of the scheme against an analytic solution over a sweep of grids.
    PdeRate(PdeRateArgs),
    /// Error of rescaled longest-chain depths against the limit, d = 2.
    StochasticRate(StochasticRateArgs),
    /// Accuracy of PDE-based and subset ranking against exact sorting.
    RankingAccuracy(RankingAccuracyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PdeRateArgs {
    #[arg(long)]
    pub case: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Cells per axis, strictly increasing.
    #[arg(long, default_value = "50,100,200,400,800")]
    pub grids: String,
    #[command(flatten)]
    pub node: NodeSolveArgs,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StochasticRateArgs {
    #[arg(long)]
    pub case: String,
    /// Sample sizes, strictly increasing; `1e3` notation is accepted.
    #[arg(long, default_value = "1e3,1e4,1e5,1e6")]
    pub sizes: String,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RankingAccuracyArgs {
    #[arg(long, default_value = "f1")]
    pub case: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "1e5")]
    pub n: String,
    /// `cells:k` pairs, e.g. `100:1e4,250:1e5`.
    #[arg(long, default_value = "100:1e4,250:1e5")]
    pub setups: String,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value = "1e6")]
    pub pairs: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
}
