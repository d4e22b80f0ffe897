mod commands;
mod setspec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Efficiency analysis with imperfectly known data.
#[derive(Debug, Parser)]
#[command(name = "hrdea", version, about)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plain DEA distances for a fully observed dataset.
    Solve(SolveArgs),
    /// Sample sets with Hit & Run and solve DEA at every iteration.
    Run(RunArgs),
    /// Robustness report and histograms from a distance matrix.
    Analyze(AnalyzeArgs),
    /// Monte Carlo comparison of imputation baselines and Hit & Run.
    Bench(BenchArgs),
    /// Beta fit and density curve for one DMU's distances.
    Density(DensityArgs),
}

/// Dataset location and variable roles. Without role flags the roles are
/// read from `<data>.schema`, or else inferred from column names: the
/// first column is the id, and columns starting with x, y, u are inputs,
/// outputs and undesirable outputs.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub inputs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub outputs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub undesirables: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Directional,
    Weak,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// input, output, proportional, undesirable, or custom:a,b,...
    #[arg(long, alias = "direction", default_value = "proportional")]
    pub orientation: String,
    #[arg(long, value_enum, default_value_t = ModelArg::Directional)]
    pub model: ModelArg,
    /// Weight of the slack sum in the reported objective.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChordArg {
    Full,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionLawArg {
    Coordinatewise,
    Sphere,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    /// Bucket width.
    #[arg(long, default_value_t = 0.01)]
    pub width: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Set specification file; every DMU gets a point set when absent.
    #[arg(long)]
    pub sets: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5000)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, value_enum, default_value_t = ChordArg::Full)]
    pub chord_rule: ChordArg,
    #[arg(long, value_enum, default_value_t = DirectionLawArg::Coordinatewise)]
    pub direction_law: DirectionLawArg,
    #[arg(long, default_value = "hrdea-out")]
    pub out_dir: PathBuf,
    /// Also write the robustness report.
    #[arg(long)]
    pub analyze: bool,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Distance matrix; defaults to `<out-dir>/distances.csv`.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value = "hrdea-out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 150)]
    pub reps: usize,
    #[arg(long, default_value_t = 80)]
    pub gaps: usize,
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "I,II,III")]
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub dmu: String,
    /// `range` for the sample range, or `q1,q2`.
    #[arg(long, default_value = "range")]
    pub support: String,
    /// Points on the density curve.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = commands::dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
