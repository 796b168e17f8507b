//! `shum`: fit optimal biomarker combinations, run simulation studies and
//! evaluate fixed combinations.
//!
//! Exit codes: 0 success, 2 input error, 3 fit failure.

mod args;
mod commands;
mod manifest;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Error carrying the process exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Fit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Fit(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Fit(m) => m,
        }
    }
}

pub fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

pub type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::Input("--workers must be at least 1".into()));
        }
        // Ignore the error if a pool already exists (rerun re-enters here).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let workers = rayon::current_num_threads();
    match cli.command {
        Command::Fit(a) => commands::fit::run(a, &argv, workers),
        Command::Simulate(a) => commands::simulate::run(a, &argv, workers),
        Command::Hum(a) => commands::hum::run(a),
        Command::Rerun(a) => commands::rerun(a),
    }
}
