//! `dgff`: validate graphs and foliations, print operators, sample fields and
//! run the verification ladder.
//!
//! Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 numerical failure
//! while building operators, 4 verification failed.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "dgff",
    version,
    about = "Layer-by-layer discrete Gaussian free fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// Graph file: `.json`, or an edge list with `u v c` lines.
    #[arg(long)]
    pub graph: PathBuf,
    /// Foliation file with a `layers` array of vertex-id lists.
    #[arg(long, conflicts_with = "roots")]
    pub foliation: Option<PathBuf>,
    /// Build the foliation by breadth-first search from these vertices.
    #[arg(long, value_delimiter = ',')]
    pub roots: Vec<String>,
    /// Skip graph and foliation validation (negative controls only).
    #[arg(long, hide = true)]
    pub unchecked: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: Input,
    /// Cluster index `n`; defaults to the last one.
    #[arg(long)]
    pub cluster: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write files into this directory instead of printing the matrix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_samples: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub cluster: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol_exact: f64,
    #[arg(long, default_value_t = 5.0, value_parser = positive)]
    pub z_max: f64,
    /// Run only the deterministic and per-sample rungs.
    #[arg(long)]
    pub skip_monte_carlo: bool,
    /// Also write `report.json` into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a graph and foliation.
    Validate(Input),
    /// Print the breadth-first foliation from `--roots`.
    Foliate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green kernel `G̃_n` of a growth cluster.
    Green(MatrixArgs),
    /// Poisson kernel `P_n` from the newest layer into the cluster.
    Poisson(MatrixArgs),
    /// Hadamard operator `Q_n` with `Q_n Q_nᵀ` and its Dirichlet Gram matrix.
    Hadamard(MatrixArgs),
    /// Write seeded field samples and increments as CSV.
    Sample(SampleArgs),
    /// Run the full verification ladder.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(input) => commands::validate(&input),
        Command::Foliate { input, out } => commands::foliate(&input, out.as_deref()),
        Command::Green(args) => commands::green(&args),
        Command::Poisson(args) => commands::poisson(&args),
        Command::Hadamard(args) => commands::hadamard(&args),
        Command::Sample(args) => commands::sample(&args),
        Command::Verify(args) => commands::verify(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            commands::print_error(&err);
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
