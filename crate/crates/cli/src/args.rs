use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "exomega",
    version,
    about = "Expectile, omega and CVaR portfolio risk toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every risk measure at one portfolio.
    Eval(EvalArgs),
    /// Solve one portfolio problem.
    Optimize(OptimizeArgs),
    /// Sweep a parameter grid and emit one frontier point per value.
    Frontier(FrontierArgs),
    /// Cross-evaluate expectile, CVaR and VaR optimizers over return floors.
    Compare(CompareArgs),
    /// Check that expectile and omega problems share their optimizers.
    Equiv(EquivArgs),
    /// Write the LP of a portfolio problem as fixed-format MPS.
    ExportLp(ExportArgs),
    /// Write a synthetic heavy-tailed scenario file.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Lp,
    Subgrad,
    Oracle,
}

impl From<BackendArg> for exomega_core::frontier::Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Lp => Self::Lp,
            BackendArg::Subgrad => Self::Subgrad,
            BackendArg::Oracle => Self::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    /// max mean s.t. neg-expectile ≤ --bound
    P1Expectile,
    /// min neg-expectile s.t. mean ≥ --floor
    P2Expectile,
    /// max mean s.t. omega at --benchmark ≥ --z
    P1Omega,
    /// max omega at --benchmark s.t. mean ≥ --floor
    P2Omega,
    /// min CVaR s.t. mean ≥ --floor
    P2Cvar,
    /// min VaR s.t. mean ≥ --floor (oracle only)
    P2Var,
}

impl ProblemArg {
    pub fn name(self) -> &'static str {
        match self {
            ProblemArg::P1Expectile => "p1-expectile",
            ProblemArg::P2Expectile => "p2-expectile",
            ProblemArg::P1Omega => "p1-omega",
            ProblemArg::P2Omega => "p2-omega",
            ProblemArg::P2Cvar => "p2-cvar",
            ProblemArg::P2Var => "p2-var",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrontierProblem {
    P1Expectile,
    P2Expectile,
    P2Cvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EquivProblem {
    /// min neg-expectile vs max omega, over return floors
    P2,
    /// max mean under a neg-expectile cap vs under an omega threshold
    P1,
}

/// `start:stop:count`, evenly spaced and inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (k as f64 / last)
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err("expected start:stop:count".into());
        };
        let start: f64 = a.trim().parse().map_err(|_| format!("bad grid start {a:?}"))?;
        let stop: f64 = b.trim().parse().map_err(|_| format!("bad grid stop {b:?}"))?;
        let count: usize = c.trim().parse().map_err(|_| format!("bad grid count {c:?}"))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err("grid ends must be finite".into());
        }
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if start > stop {
            return Err("grid start must not exceed stop".into());
        }
        Ok(Grid { start, stop, count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbColumn {
    /// Use a leading `prob` column when the header has one.
    Auto,
    Yes,
    No,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario CSV: header of instrument names, one row per scenario.
    #[arg(long, value_name = "PATH")]
    pub scenarios: PathBuf,
    /// Whether the first column holds scenario probabilities.
    #[arg(long, value_enum, default_value = "auto")]
    pub prob_column: ProbColumn,
    /// Output format (default: json for eval/optimize, csv for tables).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Recorded in the output for experiment bookkeeping.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include wall-clock times (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated weights; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    /// Use the weights as given instead of rescaling them to sum to one.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub benchmark: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "lp")]
    pub backend: BackendArg,
    /// Lattice spacing for the oracle backend (0.01 or 0.001).
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Iteration cap for the subgradient backend.
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    /// Step constant of the subgradient backend.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Risk cap b for p1-expectile.
    #[arg(long, allow_hyphen_values = true)]
    pub bound: Option<f64>,
    /// Return floor r for the P2 problems.
    #[arg(long, allow_hyphen_values = true)]
    pub floor: Option<f64>,
    /// Omega benchmark B.
    #[arg(long, allow_hyphen_values = true)]
    pub benchmark: Option<f64>,
    /// Omega threshold z for p1-omega.
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum)]
    pub problem: FrontierProblem,
    /// Grid of b (P1) or r (P2) values.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Grid,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Adds an omega column at this benchmark.
    #[arg(long, allow_hyphen_values = true)]
    pub benchmark: Option<f64>,
    /// Worker threads for the sweep.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Grid of return floors r.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Grid,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    /// Worker threads for the sweep.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "p2")]
    pub problem: EquivProblem,
    /// Omega threshold z > 1; the expectile level is 1/(1+z).
    #[arg(long)]
    pub z: f64,
    /// Return floor (p2).
    #[arg(long, allow_hyphen_values = true)]
    pub floor: Option<f64>,
    /// Benchmark B (p1).
    #[arg(long, allow_hyphen_values = true)]
    pub benchmark: Option<f64>,
    /// Sweep floors (p2) or benchmarks (p1) instead of one value.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
    /// Lattice spacing for the p1 oracle comparison.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Scenario CSV.
    #[arg(long, value_name = "PATH")]
    pub scenarios: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub prob_column: ProbColumn,
    /// MPS file to write.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub bound: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub floor: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub benchmark: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output scenario CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub assets: usize,
    /// Number of scenarios.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Student-t degrees of freedom of the idiosyncratic noise.
    #[arg(long, default_value_t = 4.0)]
    pub dof: f64,
    /// Draw unequal scenario probabilities.
    #[arg(long)]
    pub weighted: bool,
}
