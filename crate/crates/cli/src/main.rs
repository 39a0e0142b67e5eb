use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use ballistic_cli::args::Cli;
use ballistic_cli::error::CliError;
use clap::error::ErrorKind;
use clap::Parser;

fn report(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.class.exit_code())
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let outcome = ballistic_cli::execute(cli, |var| std::env::var(var).ok())?;
    match &cli.output {
        Some(path) => std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?,
        None => match std::io::stdout().write_all(outcome.body.as_bytes()) {
            // A closed reader (`qbe ... | head`) is not a failure of ours.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r.context("writing to stdout")?,
        },
    }
    Ok(outcome.failure.as_ref().map_or(ExitCode::SUCCESS, report))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::input(e.to_string().trim_end())),
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<CliError>() {
            Some(cli_error) => report(cli_error),
            None => report(&CliError::internal(format!("{e:#}"))),
        },
    }
}
