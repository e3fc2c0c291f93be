//! Command-line front end: instance generation, planning, coordinate
//! queries, sampling, the validation suite and benchmarks.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a configuration
//! error, 3 when a validation or verification step fails.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Overrides};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "dequant-svt", version, about = "Sampling-based singular value transformation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic A (and a unit b in its column space) as CSV.
    Gen,
    /// Print the planned parameters as JSON.
    Plan,
    /// Estimate one coordinate of Φ_f(A*) b over several trials.
    Query,
    /// Draw from the output distribution and compare with the exact one.
    Sample,
    /// Run the full property suite.
    Validate,
    /// Time the data-structure operations.
    Bench,
}

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::TargetOutOfRange { .. }
        | Error::PlanTooLarge { .. }
        | Error::TableRange { .. }
        | Error::NonDifferentiable { .. }
        | Error::Parse(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::DuplicateEntry { .. }
        | Error::IndexOutOfRange { .. }
        | Error::NonFiniteEntry { .. }
        | Error::DimensionMismatch(_)
        | Error::Snapshot(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn emit(json: &str, cfg: &ExperimentConfig, to_file: bool) -> Result<(), Error> {
    match (&cfg.out, to_file) {
        (Some(path), true) => std::fs::write(path, json)?,
        _ => std::io::stdout().lock().write_all(json.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    let cfg = ExperimentConfig::resolve(&cli.overrides)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let out = match cli.command {
        Command::Gen => commands::gen(&cfg)?,
        Command::Plan => commands::plan(&cfg)?,
        Command::Query => commands::query(&cfg)?,
        Command::Sample => commands::sample(&cfg)?,
        Command::Validate => commands::validate(&cfg)?,
        Command::Bench => commands::bench(&cfg)?,
    };
    // `gen` writes the matrix to --out, so its report goes to stdout.
    emit(&out.json, &cfg, cli.command != Command::Gen)?;
    Ok(out.pass)
}

/// Parses arguments, runs the command and maps the result to an exit code.
pub fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
