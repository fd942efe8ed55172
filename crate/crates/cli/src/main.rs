//! `trafficscope`: hourly road-traffic count analytics from the command line.
//!
//! Exit status is 0 on success, 1 for usage or configuration problems and 2
//! when the input data cannot be analysed. Set `TRAFFICSCOPE_LOG` (for
//! example to `info`) to change how much is logged to standard error.

mod commands;
mod config;
mod output;
mod svg;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use crate::commands::Command;
use crate::config::{Flags, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Data { message: String, report: Option<PathBuf> },
    #[error("cannot write '{path}': {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } => 1,
            CliError::Data { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "trafficscope", version, about = "Hourly road-traffic count analytics")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAFFICSCOPE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = RunConfig::from_flags(&cli.flags).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(written) => {
            log::info!("{} files written", written.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Data { report: Some(p), .. } = &e {
                eprintln!("ingest report: {}", p.display());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
