//! `rqbc`: batch front end for sweeps, protocol Monte Carlo, attack studies
//! and validity audits.
//!
//! Exit codes: 0 ok, 1 usage, 2 invariant violation, 3 config or I/O error.

mod cli;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use commands::Target;
use config::Settings;
use error::CliError;

fn configure_threads(jobs: Option<u32>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.common.jobs)?;
    let mut settings = match &cli.common.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(seed) = cli.common.seed {
        settings.protocol.seed = seed;
    }
    let target = Target { format: cli.common.format, out: cli.common.out.as_deref() };
    match &cli.command {
        Command::Sweep(a) => commands::sweep(&mut settings, a, target),
        Command::Run(a) => commands::run(&mut settings, a, target),
        Command::Attack(a) => commands::attack(&mut settings, a, target),
        Command::Validate(a) => commands::validate(&mut settings, a, target),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rqbc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
