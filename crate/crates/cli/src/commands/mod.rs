pub mod fit;
pub mod hum;
pub mod simulate;

use std::path::Path;

use clap::Parser;
use shum::{load_csv, CsvLoad, Method};

use crate::args::{Cli, Command, RerunArgs};
use crate::{input_err, CliResult, Failure};

/// Reads the CSV and optionally log-transforms it.
pub fn load_dataset(path: &Path, outcome: &str, markers: &[String], log: bool) -> CliResult<CsvLoad> {
    let mut load = load_csv(path, outcome, markers).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    if load.dropped_rows > 0 {
        log::warn!(
            "dropped {} of {} rows with missing values",
            load.dropped_rows,
            load.total_rows
        );
    }
    if log {
        load.dataset = load.dataset.log_transform().map_err(input_err)?;
    }
    Ok(load)
}

/// Drops repeated methods, keeping first occurrences.
pub fn unique_methods(methods: &[Method]) -> CliResult<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for &m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Failure::Input("no methods given".into()));
    }
    Ok(out)
}

pub fn rerun(a: RerunArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| input_err(format!("{}: {e}", a.manifest.display())))?;
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(input_err)?;
    let argv: Vec<String> = manifest
        .get("argv")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .ok_or_else(|| Failure::Input("manifest has no argv".into()))?;
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| input_err(format!("recorded command: {e}")))?;
    if let Some(out) = a.out {
        match &mut cli.command {
            Command::Fit(f) => f.output.out = out,
            Command::Simulate(s) => s.output.out = out,
            Command::Hum(_) | Command::Rerun(_) => {}
        }
    }
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Failure::Input("manifest records another rerun".into()));
    }
    crate::run(cli, argv)
}
