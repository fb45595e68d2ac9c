//! `btdw`: backtrack-downweighted walk centralities from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "btdw",
    version,
    about = "Backtrack-downweighted walk centralities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scores for one (theta, alpha) pair.
    Centrality(CentralityArgs),
    /// Scores, IPR and rank correlations over a (theta, alpha) grid.
    Sweep(SweepArgs),
    /// The convergence bound alpha* = 1/rho(Z) for each theta.
    AlphaStar(AlphaStarArgs),
    /// Generating-function matrix and total communicability.
    Genfun(GenfunArgs),
    /// The count matrix q_k(A).
    WalkCounts(WalkCountArgs),
    /// Run the built-in fixture self-checks.
    Validate,
}

/// Where the graph comes from.
#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list or MatrixMarket file.
    #[arg(long, conflicts_with = "named", required_unless_present = "named")]
    pub graph: Option<PathBuf>,
    /// Built-in graph: star:M, regular:N:D, cycle:N, dcycle:N, path:N, figure1, squid.
    #[arg(long)]
    pub named: Option<String>,
    /// Each edge-list line is one directed edge (the default).
    #[arg(long, conflicts_with = "undirected")]
    pub directed: bool,
    /// Each edge-list line joins both directions.
    #[arg(long)]
    pub undirected: bool,
    /// Node ids in input and output files start at 0 instead of 1.
    #[arg(long)]
    pub zero_based: bool,
}

/// Options shared by the numerical commands.
#[derive(Debug, Args)]
pub struct NumericArgs {
    /// Seed for the power-iteration start vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for power iteration and series truncation.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "katz-btdw")]
    pub measure: String,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, conflicts_with = "alpha_rel")]
    pub alpha: Option<f64>,
    /// Alpha as a fraction of alpha*(theta).
    #[arg(long)]
    pub alpha_rel: Option<f64>,
    #[arg(long, default_value = "none")]
    pub norm: String,
    /// Output CSV; a JSON sidecar is written next to it. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "katz-btdw")]
    pub measure: String,
    /// Theta grid, `a,b,c` or `start:stop:step`.
    #[arg(long)]
    pub theta: String,
    /// Absolute alpha grid.
    #[arg(long, conflicts_with = "alpha_rel")]
    pub alpha: Option<String>,
    /// Alpha grid as fractions of alpha*(theta).
    #[arg(long)]
    pub alpha_rel: Option<String>,
    #[arg(long, default_value = "none")]
    pub norm: String,
    /// Reference `node,score` file for Kendall tau and Spearman rho.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Output prefix: writes PREFIX.scores.csv, PREFIX.summary.csv and PREFIX.json.
    /// Without it the summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write theta-by-alpha tables (PREFIX.ipr.csv, PREFIX.tau.csv).
    #[arg(long)]
    pub wide: bool,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Args)]
pub struct AlphaStarArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Theta grid, `a,b,c` or `start:stop:step`.
    #[arg(long, default_value = "0:1:0.1")]
    pub theta: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesKind {
    Resolvent,
    Exponential,
    CustomFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    /// Partial sums of the count-matrix recurrence.
    Direct,
    /// Series in the block operator Z.
    Blockz,
}

#[derive(Debug, Args)]
pub struct GenfunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, value_enum, default_value = "exponential")]
    pub series: SeriesKind,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coefficient file for `--series custom-file`: c_0, c_1, ... separated by
    /// commas or whitespace.
    #[arg(long)]
    pub custom: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "blockz")]
    pub route: Route,
    /// Only the action on the all-ones vector, not the full matrix.
    #[arg(long)]
    pub action_only: bool,
    /// Output CSV for the action; the matrix goes to the same stem with
    /// `.matrix.csv`, plus a JSON sidecar. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    Recurrence,
    /// Walk-by-walk enumeration (small graphs only).
    Enumerate,
    /// The theta = 0 recurrence for nonbacktracking counts.
    Nonbacktracking,
}

#[derive(Debug, Args)]
pub struct WalkCountArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Walk length.
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "recurrence")]
    pub method: CountMethod,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Centrality(a) => commands::centrality(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::AlphaStar(a) => commands::alpha_star_cmd(a),
        Command::Genfun(a) => commands::genfun(a),
        Command::WalkCounts(a) => commands::walk_counts(a),
        Command::Validate => commands::validate(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
