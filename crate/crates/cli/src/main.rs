//! `gartfima` command-line tool.

mod commands;
mod io;
mod manifest;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use commands::Command;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    NoConvergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::NoConvergence(_) => 3,
        }
    }
}

impl From<gartfima::Error> for CliError {
    fn from(e: gartfima::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gartfima", version, about = "Tempered Gegenbauer long-memory models: spectra, autocovariances, simulation, estimation and forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GARTFIMA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("GARTFIMA_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            if !matches!(e.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let mut cmd = Cli::command();
                let sub = std::env::args().nth(1).and_then(|name| cmd.find_subcommand_mut(&name).cloned());
                let help = match sub {
                    Some(mut s) => s.render_help(),
                    None => cmd.render_help(),
                };
                eprintln!("\n{help}");
            }
            return ExitCode::from(1);
        }
    };
    let result = init_threads().and_then(|_| commands::run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
