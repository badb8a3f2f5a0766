//! `squint` — interval estimates of entropy and information, from the shell.
//!
//! Every subcommand writes one CSV table (stdout or `--output`) and exits
//! with a code that scripts can branch on:
//!
//! * 0 — success;
//! * 2 — bad arguments or configuration;
//! * 3 — a model failed to load or build;
//! * 4 — the run completed but produced an unusable estimate
//!   (non-finite endpoints or invalid replicate values).
//!
//! Output is byte-for-byte reproducible for a fixed seed and configuration
//! unless `--timing` is passed, which fills the otherwise-empty
//! `wall_time_ms` column with measured durations.

mod baseline;
mod config;
mod mvn;
mod pair_grid;
mod rank;
mod rows;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// A failed run, carrying the process exit code it maps onto.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// Bad arguments or configuration (exit 2).
    Config(String),
    /// A model failed to load or build (exit 3).
    Model(String),
    /// The run finished but the estimate is unusable (exit 4).
    Invalid(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Model(_) => 3,
            Failure::Invalid(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Model(m) | Failure::Invalid(m) => m,
        }
    }
}

impl From<squint::Error> for Failure {
    fn from(e: squint::Error) -> Self {
        match e {
            squint::Error::ModelLoad(m) => Failure::Model(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "squint",
    version,
    about = "Two-sided interval estimates of entropy and information measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one measure described by a JSON configuration file.
    Run(run::RunArgs),
    /// Sweep particle counts and proposals on a random correlated Gaussian.
    ExperimentMvn(mvn::MvnArgs),
    /// Rank variables of a diagnosis network by conditional entropy.
    ExperimentRank(rank::RankArgs),
    /// Log-weight diagnostics across a grid of Gaussian proposal widths.
    ExperimentPairGrid(pair_grid::PairGridArgs),
    /// Compare interval estimates against a nearest-neighbor point estimate.
    BaselineCompare(baseline::BaselineArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::run(args),
        Command::ExperimentMvn(args) => mvn::run(args),
        Command::ExperimentRank(args) => rank::run(args),
        Command::ExperimentPairGrid(args) => pair_grid::run(args),
        Command::BaselineCompare(args) => baseline::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("squint: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
