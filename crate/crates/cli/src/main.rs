//! `radio-bcast`: generate networks, run protocols, work with STSs and
//! reproduce the analysis tables.

mod commands;
mod opts;

use std::process::ExitCode;

use clap::Parser;

use opts::Cli;

/// Exit status for bad arguments and refused configurations.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for failures while running a valid command.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<radio_bcast::Error> for CliError {
    fn from(e: radio_bcast::Error) -> Self {
        use radio_bcast::Error as E;
        match e {
            E::EtaTooLargeForExact { .. } | E::EtaTooLargeForExhaustive { .. } => CliError::Usage(
                format!("{e} (set RADIO_BCAST_EXACT_CAP to override; cost grows factorially)"),
            ),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
