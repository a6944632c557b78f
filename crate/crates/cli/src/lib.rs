//! Command-line front end: argument parsing and the four subcommands.
//!
//! Every CSV artifact starts with `#` lines carrying the tool version and
//! the fully resolved configuration (seed included); JSON artifacts carry
//! the same under `config`.

pub mod args;
pub mod commands;

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

pub use args::{Cli, Command};
pub use commands::Rendered;

/// Runs a parsed command line, writing artifacts to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let threads = match &cli.command {
        Command::Simulate(a) => a.population.threads,
        Command::Sweep(a) => a.threads,
        _ => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building the worker pool")?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let (rendered, out) = match &cli.command {
        Command::Bounds(a) => (commands::bounds(a)?, a.out.as_deref()),
        Command::Simulate(a) => (commands::simulate_cmd(a)?, a.out.as_deref()),
        Command::Leakage(a) => (commands::leakage(a)?, a.out.as_deref()),
        Command::Sweep(a) => (commands::sweep(a)?, a.out.as_deref()),
    };
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    match (out, rendered.summary) {
        (Some(path), summary) => {
            write_file(path, &rendered.artifact)?;
            if let Some(s) = summary {
                stdout.write_all(s.as_bytes())?;
            }
        }
        (None, summary) => {
            stdout.write_all(rendered.artifact.as_bytes())?;
            if let Some(s) = summary {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
