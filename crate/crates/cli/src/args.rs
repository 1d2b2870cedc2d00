use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(
    name = "htspectra",
    version,
    about = "Limiting spectral densities of heavy-tailed random matrices and their Monte Carlo checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads (default: hardware count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Limiting density on a grid or at given points.
    Theory(TheoryArgs),
    /// Eigenvalues of independent matrix trials.
    Simulate(SimulateArgs),
    /// Distance between a theory curve and simulated eigenvalues.
    Compare(CompareArgs),
    /// Points where the Wigner boundary solution may fail to be analytic.
    CriticalSet(CriticalSetArgs),
    /// Runs the acceptance criteria at reduced size.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Wigner,
    Band,
    Wishart,
    Perturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Pareto,
    Stable,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "wigner")]
    pub model: ModelKind,

    /// Tail exponent in (0, 2], with 2 meaning the semicircle limit.
    #[arg(long)]
    pub alpha: f64,

    /// Aspect ratio in (0, 1] of the covariance model.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Variance profile, as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub profile: Option<String>,

    /// Law of the diagonal perturbation, as inline JSON or a path.
    #[arg(long)]
    pub diag: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Evaluate only at these points instead of on a grid.
    #[arg(long = "t", value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,

    #[arg(long, default_value_t = 1e-3)]
    pub t_min: f64,

    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,

    /// Log-spaced points per sign.
    #[arg(long, default_value_t = 400)]
    pub points: usize,

    #[arg(long, default_value_t = 1e-6)]
    pub eps_floor: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Matrix size (rows of `X` for the covariance model).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Columns of `X`; defaults to `round(gamma n)`.
    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    #[arg(long, env = "HTSPECTRA_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Entry law.
    #[arg(long, value_enum, default_value = "pareto")]
    pub law: LawKind,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Density CSV written by `theory`, with its JSON sidecar alongside.
    #[arg(long)]
    pub theory: PathBuf,

    /// Eigenvalue CSV written by `simulate`.
    #[arg(long)]
    pub eigenvalues: PathBuf,

    /// Comparison window `a:b`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,

    /// Radius of the neighbourhood of zero left out of the comparison.
    #[arg(long = "exclude-zero")]
    pub exclude_zero: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CriticalSetArgs {
    #[arg(long)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.05)]
    pub r_min: f64,

    #[arg(long, default_value_t = 20.0)]
    pub r_max: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SelftestArgs {
    /// Criteria to run (default: all).
    pub criteria: Vec<u8>,

    /// Run at full size instead of the reduced size.
    #[arg(long)]
    pub full: bool,
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad lower bound `{a}`: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad upper bound `{b}`: {e}"))?;
    if !(b > a) {
        return Err(format!("empty window {a}:{b}"));
    }
    Ok((a, b))
}
