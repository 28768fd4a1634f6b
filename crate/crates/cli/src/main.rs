#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod error;
mod grid;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::cli::Cli;
use crate::error::CliError;

fn main() -> ExitCode {
    let started = Instant::now();
    match run(Cli::parse()) {
        Ok(name) => {
            eprintln!("bcmix: {name} finished in {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bcmix: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<&'static str, CliError> {
    let (globals, command) = cli::resolve(cli)?;
    if let Some(t) = globals.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    commands::run(&globals, &command)?;
    Ok(command.name())
}
