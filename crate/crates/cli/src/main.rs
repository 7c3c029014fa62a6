//! `gainswitch` command-line front end.
//!
//! Exit codes: 0 success (possibly with warnings), 1 runtime or data error,
//! 2 usage error.

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command};

/// Bad invocation: rejected flags, values or config entries.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cli = cli.resolve()?;
    let ctx = commands::Context::new(&cli.global)?;
    match cli.command {
        Command::Optimal(a) => commands::optimal(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Metric(a) => commands::metric(&ctx, a),
        Command::Circuit(a) => commands::circuit(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
