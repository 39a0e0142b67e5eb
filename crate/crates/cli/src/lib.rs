//! Command-line front end for `ballistic-core`: machine description files,
//! JSON reports and CSV spectra and time series.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod machine_file;
pub mod output;

use args::{Cli, Command};
use commands::Outcome;
use config::Settings;
use error::CliResult;

/// Resolves settings and runs the subcommand; `env` looks up `QBE_*` variables.
pub fn execute(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> CliResult<Outcome> {
    let k_flag = match &cli.command {
        Command::Spectrum { k, .. } | Command::Evolve { k, .. } => *k,
        _ => None,
    };
    let settings = Settings::resolve(env, cli.config.as_deref(), k_flag)?;
    commands::run(&cli.command, &settings)
}
