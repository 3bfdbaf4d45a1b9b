//! `brink` command-line front end: config loading, the four commands and
//! their exit-code contract.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use commands::Context;
use config::RunConfig;
use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Ground state of the configured model.
    Solve,
    /// Critical coupling by matching, bisection or both.
    Critical,
    /// Check a decay envelope against a computed or ingested state.
    Envelope,
    /// Ground states over a list of parameter values.
    Sweep,
}

fn execute(
    command: Command,
    config_path: &Path,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<i32, CliError> {
    let config = RunConfig::load(config_path)?;
    let out_dir = out.unwrap_or_else(|| config.output.directory.clone());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let workers = match workers {
        Some(0) => return Err(CliError::Config("--workers must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let ctx = Context {
        config,
        out_dir,
        workers,
    };
    match command {
        Command::Solve => commands::cmd_solve(&ctx),
        Command::Critical => commands::cmd_critical(&ctx),
        Command::Envelope => commands::cmd_envelope(&ctx),
        Command::Sweep => commands::cmd_sweep(&ctx),
    }
}

/// Runs one command and returns the process exit code; errors are reported
/// on stderr.
pub fn run(
    command: Command,
    config_path: &Path,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> i32 {
    match execute(command, config_path, out, workers) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("brink: {e}");
            e.exit_code()
        }
    }
}
