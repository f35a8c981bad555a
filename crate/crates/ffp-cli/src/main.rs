//! `ffp`: streaming spectral estimation from the command line.
//!
//! Subcommands:
//! - `simulate`: write seeded test signals as CSV;
//! - `estimate`: run an online estimator over a CSV stream (file or stdin);
//! - `experiment`: run a Monte Carlo suite from a JSON config;
//! - `surface`: evaluate a likelihood surface over a saved spectrum snapshot.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error,
//! 3 numeric failure.

mod cli_io;
mod estimate;
mod experiment;
mod simulate;
mod surface;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ffp", version, about = "Online spectral density estimation with forgetting factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a test signal and write it as CSV.
    #[command(subcommand)]
    Simulate(simulate::SimulateCmd),
    /// Run an online estimator over a CSV stream.
    Estimate(estimate::EstimateArgs),
    /// Run a Monte Carlo experiment suite described by a JSON config.
    Experiment(experiment::ExperimentArgs),
    /// Evaluate a Whittle likelihood surface on a saved spectrum snapshot.
    Surface(surface::SurfaceArgs),
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<ffp_core::Error> for CliError {
    fn from(e: ffp_core::Error) -> Self {
        use ffp_core::Error::*;
        let code = match e {
            Parameter(_) | Domain(_) => 1,
            Input(_) => 2,
            State(_) | Eval(_) => 3,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::data(e.to_string())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Simulate(cmd) => simulate::run(cmd),
        Command::Estimate(args) => estimate::run(args),
        Command::Experiment(args) => experiment::run(args),
        Command::Surface(args) => surface::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
