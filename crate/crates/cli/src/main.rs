//! `scissor`: command-line driver for scissor-core.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 invalid input,
//! 3 infeasible design, 4 interrupted grid search.

mod args;
mod commands;
mod error;
mod input;
mod output;
mod svg;

use error::{CliError, CliResult};

/// Caps the worker pool with `SCISSOR_THREADS`.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("SCISSOR_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::invalid(format!("SCISSOR_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::invalid(format!("cannot start {n} worker threads: {e}")))
}

fn run() -> CliResult<()> {
    configure_threads()?;
    let (cli, config) = args::parse(std::env::args_os().collect())?;
    commands::dispatch(&cli.command, config)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
