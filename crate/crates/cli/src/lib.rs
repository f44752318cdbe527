//! Command-line driver: CSV ingestion, chain orchestration, diagnostics
//! output and the verification report.

pub mod args;
pub mod config;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod run;
pub mod svg;
pub mod table;
pub mod verify_cmd;

use args::{Cli, Command};
use log::error;

pub use error::{CliError, CliResult};

/// Exit status for failed checks.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for invalid input or configuration.
pub const EXIT_ERROR: i32 = 2;

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run(a) => {
            let config = a.to_config()?;
            run::run(&config, &a.out)?;
            Ok(0)
        }
        Command::Verify(a) => {
            let report = verify_cmd::verify(&a.to_config()?, &a.out)?;
            if report.passed {
                println!("all checks passed");
                Ok(0)
            } else {
                eprintln!("failed checks: {}", report.failures().join("; "));
                Ok(EXIT_CHECK_FAILED)
            }
        }
        Command::Plot { out } => {
            run::render_figures(&out)?;
            Ok(0)
        }
    }
}
