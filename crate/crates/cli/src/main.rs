//! `relucov`: evaluate networks, score test suites, generate covering
//! inputs and run the analysis batteries.
//!
//! Exit codes: 0 ok, 2 input error, 3 config error, 4 property failure,
//! 5 internal error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "relucov",
    version,
    about = "Structural coverage for feedforward ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print u, v, sign and label for each input, one row per input.
    #[command(allow_negative_numbers = true)]
    Eval(Run),
    /// Score a suite under a criterion and write the report.
    #[command(allow_negative_numbers = true)]
    Coverage(Run),
    /// Generate inputs covering a pair set and write the suite and report.
    #[command(allow_negative_numbers = true)]
    Gen(Run),
    /// Check criteria subsumption on a battery of random networks.
    #[command(allow_negative_numbers = true)]
    Lattice(Run),
    /// Enumerate the feasible activation patterns of a network.
    #[command(allow_negative_numbers = true)]
    Patterns(Run),
}

#[derive(Args)]
struct Run {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    options: RunConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, run, f): (&str, Run, fn(&RunConfig) -> Result<(), CliError>) = match cli.command {
        Command::Eval(r) => ("eval", r, commands::eval),
        Command::Coverage(r) => ("coverage", r, commands::coverage_cmd),
        Command::Gen(r) => ("gen", r, commands::gen),
        Command::Lattice(r) => ("lattice", r, commands::lattice),
        Command::Patterns(r) => ("patterns", r, commands::patterns),
    };
    let cfg = RunConfig::resolve(run.config.as_deref(), run.options)?;
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("{name}: thread pool: {e}")))?;
    }
    f(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relucov: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
