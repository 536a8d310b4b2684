//! Command-line front end of `entroflow-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod interchange;
pub mod report;
pub mod spec;

use std::ffi::OsString;

use clap::Parser;

use crate::commands::{execute, Cli};
use crate::error::{CliError, ExitCode};

/// Runs one invocation and returns its exit status. Diagnostics go to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("entroflow: {e}");
            e.exit_code() as i32
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let command = match (cli.config, cli.command) {
        (Some(path), _) => {
            let config = config::load_config(&path)?;
            if cli.check_config {
                return Ok(());
            }
            let parsed = Cli::try_parse_from(config.to_argv()).map_err(|e| CliError::validation(e.to_string()))?;
            parsed.command.expect("validated config names a subcommand")
        }
        (None, Some(command)) => command,
        (None, None) => return Err(CliError::validation("a subcommand or --config is required")),
    };
    let outcome = execute(&command)?;
    match outcome.inconsistency {
        Some(msg) => Err(CliError::Inconsistency(msg)),
        None => Ok(()),
    }
}
