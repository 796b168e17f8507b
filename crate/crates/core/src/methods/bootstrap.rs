//! Stratified bootstrap standard errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, FitOptions, FitReport, Method};
use crate::data::MarkerDataset;
use crate::error::{HumError, Result};

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    /// Standard deviation of each coefficient across replicates, in the
    /// anchor convention of the full-data fit.
    pub coefficient_se: Vec<f64>,
    pub ehum_se: f64,
    pub seeds: Vec<u64>,
    /// Replicates whose fit failed or could not be re-anchored.
    pub failures: Vec<(u64, String)>,
}

/// Resamples rows with replacement inside each category, keeping sizes.
pub fn stratified_resample(data: &MarkerDataset, rng: &mut impl Rng) -> Result<MarkerDataset> {
    let picks: Vec<Vec<usize>> = data
        .sizes()
        .iter()
        .map(|&n| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect();
    data.select_rows(&picks)
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Fits `method` once on the full data to fix the anchor, then bootstraps.
pub fn bootstrap_se(
    data: &MarkerDataset,
    method: Method,
    replicates: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<BootstrapSummary> {
    let reference = fit(data, method, opts)?;
    bootstrap_se_anchored(data, &reference, replicates, seed, opts)
}

/// Bootstrap around an existing fit. Replicate `b` uses the seed
/// `seed + b`; replicates run in parallel but results do not depend on
/// scheduling.
pub fn bootstrap_se_anchored(
    data: &MarkerDataset,
    reference: &FitReport,
    replicates: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<BootstrapSummary> {
    if replicates < 2 {
        return Err(HumError::InvalidParameter(
            "bootstrap needs at least two replicates".into(),
        ));
    }
    let method = reference.method;
    let anchor = reference.coefficients.anchor();
    let seeds: Vec<u64> = (0..replicates as u64).map(|b| seed.wrapping_add(b)).collect();

    let outcomes: Vec<std::result::Result<(Vec<f64>, f64), String>> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sample = stratified_resample(data, &mut rng).map_err(|e| e.to_string())?;
            let report = fit(&sample, method, opts).map_err(|e| e.to_string())?;
            let coefs = match anchor {
                Some(a) => report
                    .coefficients
                    .rescaled(a)
                    .map_err(|e| e.to_string())?
                    .beta()
                    .to_vec(),
                None => report.coefficients.beta().to_vec(),
            };
            Ok((coefs, report.ehum_at_solution))
        })
        .collect();

    let mut failures = Vec::new();
    let mut coefs = Vec::new();
    let mut ehums = Vec::new();
    for (&s, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            Ok((c, e)) => {
                coefs.push(c);
                ehums.push(e);
            }
            Err(msg) => failures.push((s, msg)),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_RATE * replicates as f64 || coefs.len() < 2 {
        return Err(HumError::BootstrapUnstable {
            failed: failures.len(),
            total: replicates,
        });
    }
    let width = reference.coefficients.len();
    let coefficient_se = (0..width)
        .map(|k| sample_sd(&coefs.iter().map(|c| c[k]).collect::<Vec<_>>()))
        .collect();
    Ok(BootstrapSummary {
        replicates,
        coefficient_se,
        ehum_se: sample_sd(&ehums),
        seeds,
        failures,
    })
}
