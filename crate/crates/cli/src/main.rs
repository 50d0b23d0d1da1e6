//! `roadgrid` — batch front end for the evidential road-mapping pipeline.
//!
//! Six subcommands cover the full loop: `simulate` writes a synthetic drive
//! to disk, `label` turns it into soft training labels, `train` fits the
//! point classifier, `postprocess-alpha` re-splits the trained head's
//! offsets, `map` runs the evidential grid pipeline, and `eval` scores the
//! fused grids against the road map.
//!
//! Every subcommand accepts `--config <FILE>` (TOML). Values from the file
//! override command-line flags, which override built-in defaults. Exit
//! codes: 0 on success, 1 on a runtime failure, 2 on a usage error.

mod commands;
mod config;
mod dataset;

use clap::{Parser, Subcommand};

use commands::{eval, label, map, postprocess, simulate, train};

/// Batch pipeline for evidential road-grid mapping on synthetic drives.
#[derive(Parser)]
#[command(name = "roadgrid", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drive: world files, per-frame scans with ground
    /// truth, odometry and poses.
    Simulate(simulate::SimulateArgs),
    /// Soft-label simulated scans against the road map, gated on
    /// localization variance and scan spacing.
    Label(label::LabelArgs),
    /// Train the point classifier on labelled scans and report held-out F1.
    Train(train::TrainArgs),
    /// Re-split the trained head's per-feature offsets over a chosen
    /// dataset; predicted probabilities are unchanged.
    PostprocessAlpha(postprocess::PostprocessArgs),
    /// Run the evidential grid pipeline over a drive, writing per-frame
    /// snapshots and a per-stage runtime log.
    Map(map::MapArgs),
    /// Score fused grids against the vector-map ground truth frame by frame.
    Eval(eval::EvalArgs),
}

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown values, malformed ranges, missing required
    /// settings, unreadable config. Exit code 2.
    Usage(String),
    /// Failure while doing the work: I/O, parsing, numerics. Exit code 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<roadgrid_core::Error> for CliError {
    fn from(e: roadgrid_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

/// Maps precondition violations raised while interpreting inputs (bad road
/// family, out-of-range noise, …) to usage errors; anything else stays a
/// runtime failure. Use only before side effects.
pub fn invalid_is_usage(e: roadgrid_core::Error) -> CliError {
    match e {
        roadgrid_core::Error::InvalidArgument(m) => CliError::Usage(m),
        other => other.into(),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Label(args) => label::run(args),
        Command::Train(args) => train::run(args),
        Command::PostprocessAlpha(args) => postprocess::run(args),
        Command::Map(args) => map::run(args),
        Command::Eval(args) => eval::run(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            std::process::exit(1);
        }
    }
}
