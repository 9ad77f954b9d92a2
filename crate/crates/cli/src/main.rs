use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod exit;
mod output;
mod pipeline;

use config::RunFile;

/// Strainers, strainer charts and glued almost isometries on finite metric spaces.
#[derive(Debug, Parser)]
#[command(name = "strainmap", version)]
struct Cli {
    /// `key = value` run file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a model space into a space file.
    Sample(commands::SampleArgs),
    /// Check the metric axioms and, optionally, a curvature bound.
    Validate(commands::ValidateArgs),
    /// Points carrying an R-long strainer, with witnesses.
    Strain(commands::StrainArgs),
    /// Build a strainer chart and measure its distortion.
    Chart(commands::ChartArgs),
    /// Glue local almost isometries around a map between two spaces.
    Glue(pipeline::GlueArgs),
    /// Distance, closeness and claim defects of a glue result.
    Verify(pipeline::VerifyArgs),
    /// Centers of mass under two weight vectors on a planar chart.
    Counterexample(pipeline::CounterexampleArgs),
}

fn run(cli: Cli) -> Result<()> {
    let file = RunFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Sample(a) => commands::sample(&file, a),
        Command::Validate(a) => commands::validate(&file, a),
        Command::Strain(a) => commands::strain(&file, a),
        Command::Chart(a) => commands::chart(&file, a),
        Command::Glue(a) => pipeline::glue_cmd(&file, a),
        Command::Verify(a) => pipeline::verify_cmd(&file, a),
        Command::Counterexample(a) => pipeline::counterexample_cmd(&file, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => exit::report(&e),
    }
}
