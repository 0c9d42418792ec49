//! `grnn-delay` — file-based pipeline around the delay estimation library.
//!
//! Subcommands: `generate` a synthetic trace, `train` a model with a fixed
//! smoothing parameter, `tune` the smoothing with the genetic algorithm,
//! `estimate` delays for unlabeled conditions, `evaluate` a model against
//! labeled data. Every command writes a `<output>.manifest.json` sidecar
//! with its fully resolved parameters; rerunning a command with the same
//! flags reproduces every output byte for byte.

mod commands;
mod manifest;
mod util;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "grnn-delay",
    version,
    about = "GRNN network delay estimation with GA-tuned kernel smoothing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Modbus-style delay trace CSV.
    Generate(commands::GenerateArgs),
    /// Fit a model with a fixed smoothing parameter (no tuning).
    Train(commands::TrainArgs),
    /// Tune the smoothing parameter with the genetic algorithm, then fit.
    Tune(commands::TuneArgs),
    /// Estimate delays for a conditions CSV using a saved model.
    Estimate(commands::EstimateArgs),
    /// Score a saved model against a labeled delay CSV.
    Evaluate(commands::EvaluateArgs),
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Train(args) => commands::train(args),
        Command::Tune(args) => commands::tune(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Evaluate(args) => commands::evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
