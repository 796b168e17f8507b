//! Output helpers. Machine files keep full precision (shortest decimal
//! that round-trips); terminal tables round to 3 decimals.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::{input_err, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| input_err(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(input_err)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let wrap = |e: csv::Error| input_err(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

/// Full-precision number for CSV cells; empty for missing, `NaN` kept.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

/// `estimate (se)` at 3 decimals.
pub fn with_se(x: f64, se: Option<f64>) -> String {
    match se {
        Some(s) => format!("{x:.3} ({s:.3})"),
        None => fmt3(x),
    }
}

/// Plain-text table: first column left aligned, the rest right aligned.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate().take(cols) {
            width[c] = width[c].max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for c in 0..cols {
            let cell = cells.get(c).map(String::as_str).unwrap_or("");
            if c == 0 {
                s.push_str(&format!("{cell:<w$}", w = width[0]));
            } else {
                s.push_str(&format!("  {cell:>w$}", w = width[c]));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(out.trim_end().chars().count()));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
