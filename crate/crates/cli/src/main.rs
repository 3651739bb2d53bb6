//! `invset`: generate data, build simultaneous bands, invert them into
//! confidence sets, and run coverage experiments.

mod cmd;
mod config;
mod error;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "invset", version, about = "Simultaneous confidence sets for inverse sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset from one of the built-in scenarios.
    Gen(cmd::gen::GenArgs),
    /// Build a simultaneous confidence band.
    Scb(cmd::scb::ScbArgs),
    /// Invert a band into inner and outer confidence sets.
    Cs(cmd::cs::CsArgs),
    /// Run a Monte Carlo coverage experiment.
    Simulate(cmd::simulate::SimulateArgs),
    /// Summarize pairwise correlations of the estimators.
    Corr(cmd::corr::CorrArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd::gen::run(a),
        Command::Scb(a) => cmd::scb::run(a),
        Command::Cs(a) => cmd::cs::run(a),
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Corr(a) => cmd::corr::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code())
        }
    }
}
