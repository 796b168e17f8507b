use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use shum::methods::ParametricMode;
use shum::Method;

#[derive(Debug, Parser)]
#[command(name = "shum", version, about = "Optimal biomarker combinations for ordered categories via smoothed HUM")]
pub struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long, global = true, env = "SHUM_WORKERS")]
    pub workers: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit combinations on a CSV dataset.
    Fit(FitArgs),
    /// Run a simulation study on a built-in scenario.
    Simulate(SimulateArgs),
    /// Empirical HUM of a fixed combination.
    Hum(HumArgs),
    /// Re-run the command recorded in a manifest.json.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricArg {
    ClosedForm,
    IntegralM3,
}

impl From<ParametricArg> for ParametricMode {
    fn from(a: ParametricArg) -> Self {
        match a {
            ParametricArg::ClosedForm => ParametricMode::ClosedForm,
            ParametricArg::IntegralM3 => ParametricMode::IntegralM3,
        }
    }
}

/// `auto` (1/sqrt(total n)) or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaArg {
    Auto,
    Fixed(f64),
}

impl LambdaArg {
    pub fn value(self) -> Option<f64> {
        match self {
            LambdaArg::Auto => None,
            LambdaArg::Fixed(v) => Some(v),
        }
    }
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaArg::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(LambdaArg::Fixed(v)),
            _ => Err(format!("lambda must be 'auto' or a positive number, got '{s}'")),
        }
    }
}

impl fmt::Display for LambdaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaArg::Auto => f.write_str("auto"),
            LambdaArg::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for LambdaArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LambdaArg::Auto => s.serialize_str("auto"),
            LambdaArg::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

/// `naive` or a comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsArg {
    Naive,
    Values(Vec<f64>),
}

impl FromStr for WeightsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("naive") {
            return Ok(WeightsArg::Naive);
        }
        s.split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("bad weight '{w}'"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(WeightsArg::Values)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "SHUM_OUT_DIR", default_value = "shum-out")]
    #[serde(skip)]
    pub out: PathBuf,

    /// Machine-readable formats to write.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,

    /// Integer-coded ordinal outcome column.
    #[arg(long)]
    pub outcome: String,

    /// Marker columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub markers: Vec<String>,

    #[arg(
        long,
        value_delimiter = ',',
        default_value = "sshum,nshum,empirical,parametric,minmax,frechet,naive"
    )]
    pub methods: Vec<Method>,

    /// Smoothing bandwidth for sshum/nshum.
    #[arg(long, default_value = "auto")]
    pub lambda: LambdaArg,

    /// Stratified bootstrap replicates for standard errors (0 = none).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,

    /// Natural-log transform all markers before fitting.
    #[arg(long)]
    pub log_transform: bool,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ParametricArg::ClosedForm)]
    pub parametric_mode: ParametricArg,

    /// Cross-check every reported EHUM against the brute-force count
    /// (small data only).
    #[arg(long)]
    pub verify_bruteforce: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Scenario 1-4.
    #[arg(long)]
    pub scenario: u8,

    /// Per-category sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "120,120,120")]
    pub n: Vec<usize>,

    #[arg(long, default_value_t = 200)]
    pub reps: usize,

    #[arg(
        long,
        value_delimiter = ',',
        default_value = "sshum,nshum,empirical,parametric,minmax,frechet"
    )]
    pub methods: Vec<Method>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value = "auto")]
    pub lambda: LambdaArg,

    #[arg(long, value_enum, default_value_t = ParametricArg::ClosedForm)]
    pub parametric_mode: ParametricArg,

    /// Monte Carlo draws for the population HUM at the reference
    /// combination (0 = skip).
    #[arg(long, default_value_t = 0)]
    pub true_hum_draws: usize,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HumArgs {
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long)]
    pub outcome: String,

    #[arg(long, value_delimiter = ',', required = true)]
    pub markers: Vec<String>,

    /// `naive` or one weight per marker, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: WeightsArg,

    #[arg(long)]
    pub log_transform: bool,

    /// Print JSON (full precision) instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// manifest.json written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Override the recorded output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
