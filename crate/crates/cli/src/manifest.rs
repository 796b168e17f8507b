//! Run manifests. The hash covers everything that determines the outputs
//! (subcommand, resolved configuration, seed, input file contents, crate
//! version) and nothing that does not (paths, wall clock, worker count).

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Timing {
    pub method: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub manifest_hash: String,
    pub version: &'static str,
    pub subcommand: &'static str,
    /// Full command line, program name first.
    pub argv: Vec<String>,
    pub config: Value,
    pub seed: u64,
    pub input_sha256: Option<String>,
    pub workers: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub timings: Vec<Timing>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Hash of the reproducibility-relevant inputs. `config` must already
/// exclude paths.
pub fn run_hash(subcommand: &str, config: &Value, seed: u64, input_sha256: Option<&str>) -> String {
    let canonical = serde_json::json!({
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "input_sha256": input_sha256,
        "version": VERSION,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

/// Serializes `config` and drops the listed keys.
pub fn config_without<T: Serialize>(config: &T, drop: &[&str]) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(map) = &mut v {
        for k in drop {
            map.remove(*k);
        }
    }
    v
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
