mod args;
mod commands;
mod output;
mod parse;

use std::process::ExitCode;

use clap::Parser;
use excursions::Error;

use args::{Cli, Command};

/// Why a run ended without output.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or values: exit 2.
    Usage(String),
    /// A numerical check did not hold: exit 1.
    Gate(String),
    Numerics(Error),
    Io(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerics(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Gate(_) | Failure::Io(_) => 1,
            Failure::Numerics(e) => match e {
                Error::NonFinite(_)
                | Error::InvalidArgument(_)
                | Error::DegenerateInterval { .. }
                | Error::InvalidTimes(_)
                | Error::IndexOutOfRange { .. }
                | Error::SeriesOutOfRange { .. } => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "invalid input: {m}"),
            Failure::Gate(m) => write!(f, "check failed: {m}"),
            Failure::Numerics(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Io(e.into()))?;
    }
    let common = &cli.common;
    match &cli.command {
        Command::Density(a) => commands::density(a, common),
        Command::Cdf(a) => commands::cdf(a, common),
        Command::Joint(a) => commands::joint(a, common),
        Command::Areas(a) => commands::areas(a, common),
        Command::Constants(a) => commands::constants(a, common),
        Command::Limits(a) => commands::limits(a, common),
        Command::Simulate(a) => commands::simulate(a, common),
        Command::Selfcheck(a) => commands::selfcheck(a, common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
