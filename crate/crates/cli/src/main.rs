//! `cstomo`: simulate Pauli count data, reconstruct states and run the
//! model-selection and uncertainty studies from the command line.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "cstomo",
    version,
    about = "Compressed-sensing quantum state tomography"
)]
pub struct Cli {
    /// Root seed; every random draw of a command derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads for batch commands (defaults to all cores).
    #[arg(long, global = true, env = "CS_TOMO_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a count dataset.
    Simulate(SimulateArgs),
    /// Reconstruct a state from a dataset.
    Reconstruct(ReconstructArgs),
    /// Cross-validate the radius multiplier and the number of settings.
    Crossval(CrossvalArgs),
    /// Direct fidelity estimate against a pure target.
    Dfe(DfeArgs),
    /// Parametric bootstrap of the reconstruction fidelity.
    Bootstrap(BootstrapArgs),
    /// Fidelity as a function of the number of settings.
    SweepM(SweepMArgs),
    /// Fidelity over a grid of settings counts and radius multipliers.
    SweepGrid(SweepGridArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `ghz`, `surrogate`, or a path to a density-matrix JSON file.
    #[arg(long, default_value = "ghz")]
    pub state: String,

    /// Number of qubits (ignored for state files).
    #[arg(long, default_value_t = 4)]
    pub n: usize,

    /// Dephasing `λ` of the GHZ coherences.
    #[arg(long, default_value_t = 0.0)]
    pub dephase: f64,

    /// Shots per setting.
    #[arg(long, default_value_t = 650)]
    pub shots: u64,

    /// `all`, a number of random settings, or a comma-separated word list.
    #[arg(long, default_value = "all")]
    pub settings: String,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 5000)]
    pub max_iterations: usize,

    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Dataset JSON file.
    #[arg(long)]
    pub data: PathBuf,

    /// Radius of the data-fit ball in squared counts.
    #[arg(
        long,
        conflicts_with = "auto_epsilon",
        required_unless_present = "auto_epsilon"
    )]
    pub epsilon: Option<f64>,

    /// Use the multinomial noise estimate of the dataset as the radius.
    #[arg(long)]
    pub auto_epsilon: bool,

    /// Also report the fidelity with this target (`ghz` or a state file).
    #[arg(long)]
    pub target: Option<String>,

    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub data: PathBuf,

    /// Settings counts to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 15, 20, 40, 60, 80])]
    pub m: Vec<usize>,

    /// Radius multipliers of each training set's noise estimate.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0])]
    pub multipliers: Vec<f64>,

    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    #[arg(long, default_value_t = 50)]
    pub repetitions: usize,

    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct DfeArgs {
    #[arg(long)]
    pub data: PathBuf,

    /// `ghz` or a path to a pure-state JSON file.
    #[arg(long, default_value = "ghz")]
    pub target: String,

    /// Use only a minimal covering set of settings.
    #[arg(long)]
    pub minimal: bool,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, default_value = "ghz")]
    pub target: String,

    /// Radius multiplier applied to each simulated dataset's noise estimate.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_multiplier: f64,

    #[arg(long, default_value_t = 100)]
    pub repetitions: usize,

    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct SweepMArgs {
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, default_value = "ghz")]
    pub target: String,

    /// Settings counts (default: 6, 10, 20, 40 and the full set).
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,

    #[arg(long, default_value_t = 50)]
    pub draws_per_m: usize,

    /// Parametric-bootstrap repetitions per `m` for the bootstrap spread column.
    #[arg(long, default_value_t = 0)]
    pub bootstrap_repetitions: usize,

    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct SweepGridArgs {
    /// Dataset whose reconstruction generates the simulated data.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_delimiter = ',', default_values_t = [4, 6, 10, 15, 20])]
    pub m: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0, 3.0])]
    pub multipliers: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    pub repetitions: usize,

    #[command(flatten)]
    pub solver: SolverArgs,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    commands::dispatch(&cli)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
