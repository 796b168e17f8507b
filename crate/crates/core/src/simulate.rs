//! Simulation scenarios and the replication harness.
//!
//! The four built-in scenarios use three markers and three ordered
//! categories. Scenarios 1-3 are multivariate normal with means
//! `(0,0,0)`, `(1.0,1.1,1.2)`, `(2.0,2.2,2.4)` and identity,
//! exchangeable(0.2) or AR(1)(0.2) covariance. Scenario 4 draws marker `j`
//! of category `i` independently from a Weibull with shape `k_j` (by
//! marker) and scale `lambda_i` (by category), `k = (0.5, 1, 1.5)`,
//! `lambda = (1, 2, 3)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{dot, Coefficients, MarkerDataset};
use crate::error::{HumError, Result};
use crate::methods::parametric::closed_form_direction;
use crate::methods::{fit, FitOptions, Method};

/// Largest tolerated share of failed fits per method in a study.
pub const MAX_STUDY_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    Exchangeable(f64),
    Ar1(f64),
}

impl CovarianceKind {
    pub fn matrix(&self, d: usize) -> DMatrix<f64> {
        match *self {
            CovarianceKind::Identity => DMatrix::identity(d, d),
            CovarianceKind::Exchangeable(rho) => {
                DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })
            }
            CovarianceKind::Ar1(rho) => {
                DMatrix::from_fn(d, d, |i, j| rho.powi((i as i32 - j as i32).abs()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// One mean vector per category, common covariance.
    Normal {
        means: Vec<Vec<f64>>,
        covariance: CovarianceKind,
    },
    /// Shape per marker, scale per category.
    Weibull { shapes: Vec<f64>, scales: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    One,
    Two,
    Three,
    Four,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub family: Family,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

const SCENARIO_MEANS: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [1.0, 1.1, 1.2], [2.0, 2.2, 2.4]];
const SCENARIO4_SHAPES: [f64; 3] = [0.5, 1.0, 1.5];
const SCENARIO4_SCALES: [f64; 3] = [1.0, 2.0, 3.0];
/// Tabulated optimal combination for scenario 4 (no closed form exists).
pub const SCENARIO4_REFERENCE_BETA: [f64; 3] = [0.047, 0.456, 1.0];

impl ScenarioConfig {
    /// One of the four built-in scenarios (`1..=4`).
    pub fn paper(scenario: u8, sizes: Vec<usize>, replications: usize, seed: u64) -> Result<Self> {
        let means = || SCENARIO_MEANS.iter().map(|m| m.to_vec()).collect();
        let (id, family) = match scenario {
            1 => (
                ScenarioId::One,
                Family::Normal {
                    means: means(),
                    covariance: CovarianceKind::Identity,
                },
            ),
            2 => (
                ScenarioId::Two,
                Family::Normal {
                    means: means(),
                    covariance: CovarianceKind::Exchangeable(0.2),
                },
            ),
            3 => (
                ScenarioId::Three,
                Family::Normal {
                    means: means(),
                    covariance: CovarianceKind::Ar1(0.2),
                },
            ),
            4 => (
                ScenarioId::Four,
                Family::Weibull {
                    shapes: SCENARIO4_SHAPES.to_vec(),
                    scales: SCENARIO4_SCALES.to_vec(),
                },
            ),
            other => {
                return Err(HumError::InvalidParameter(format!(
                    "unknown scenario {other}; expected 1-4"
                )))
            }
        };
        let cfg = Self {
            id,
            family,
            sizes,
            replications,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_categories(&self) -> usize {
        match &self.family {
            Family::Normal { means, .. } => means.len(),
            Family::Weibull { scales, .. } => scales.len(),
        }
    }

    pub fn n_markers(&self) -> usize {
        match &self.family {
            Family::Normal { means, .. } => means.first().map_or(0, Vec::len),
            Family::Weibull { shapes, .. } => shapes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(HumError::InvalidParameter("replications must be >= 1".into()));
        }
        if self.sizes.len() != self.n_categories() {
            return Err(HumError::DimensionMismatch {
                expected: self.n_categories(),
                actual: self.sizes.len(),
            });
        }
        if self.sizes.contains(&0) {
            return Err(HumError::InvalidParameter("sample sizes must be positive".into()));
        }
        Sampler::new(&self.family).map(|_| ())
    }
}

/// Prepared per-category row sampler.
#[derive(Debug, Clone)]
enum Sampler {
    Normal {
        means: Vec<DVector<f64>>,
        chol: DMatrix<f64>,
    },
    Weibull {
        shapes: Vec<f64>,
        scales: Vec<f64>,
    },
}

impl Sampler {
    fn new(family: &Family) -> Result<Self> {
        match family {
            Family::Normal { means, covariance } => {
                let d = means.first().map_or(0, Vec::len);
                if d == 0 || means.len() < 2 || means.iter().any(|m| m.len() != d) {
                    return Err(HumError::InvalidParameter(
                        "normal family needs >= 2 equal-length mean vectors".into(),
                    ));
                }
                let chol = covariance
                    .matrix(d)
                    .cholesky()
                    .ok_or(HumError::NotPositiveDefinite)?
                    .l();
                Ok(Sampler::Normal {
                    means: means.iter().map(|m| DVector::from_column_slice(m)).collect(),
                    chol,
                })
            }
            Family::Weibull { shapes, scales } => {
                if shapes.is_empty() || scales.len() < 2 {
                    return Err(HumError::InvalidParameter(
                        "weibull family needs shapes and >= 2 scales".into(),
                    ));
                }
                if shapes.iter().chain(scales).any(|v| !(*v > 0.0)) {
                    return Err(HumError::InvalidParameter(
                        "weibull shapes and scales must be positive".into(),
                    ));
                }
                Ok(Sampler::Weibull {
                    shapes: shapes.clone(),
                    scales: scales.clone(),
                })
            }
        }
    }

    fn fill_row<R: Rng>(&self, category: usize, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Sampler::Normal { means, chol } => {
                let d = chol.nrows();
                let z: DVector<f64> = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
                let x = &means[category] + chol * z;
                out.extend(x.iter());
            }
            Sampler::Weibull { shapes, scales } => {
                let scale = scales[category];
                for &k in shapes {
                    out.push(weibull_quantile(1.0 - rng.random::<f64>(), k, scale));
                }
            }
        }
    }
}

/// `n` rows of `N(mean, cov)` as a row-major `n x d` matrix: the Cholesky
/// factor applied to standard normals (ziggurat sampler).
pub fn sample_mvn<R: Rng>(mean: &[f64], cov: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let d = mean.len();
    if cov.nrows() != d || cov.ncols() != d {
        return Err(HumError::DimensionMismatch {
            expected: d,
            actual: cov.nrows(),
        });
    }
    if (cov - cov.transpose()).amax() > 1e-12 {
        return Err(HumError::NotPositiveDefinite);
    }
    let l = cov.clone().cholesky().ok_or(HumError::NotPositiveDefinite)?.l();
    let mu = DVector::from_column_slice(mean);
    let mut out = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: DVector<f64> = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        out.extend((&mu + &l * z).iter());
    }
    Ok(out)
}

/// Weibull quantile `scale * (-ln u)^(1/shape)` for `u` in `(0, 1]`.
pub fn weibull_quantile(u: f64, shape: f64, scale: f64) -> f64 {
    scale * (-u.ln()).powf(1.0 / shape)
}

/// Inverse-CDF Weibull draws.
pub fn sample_weibull<R: Rng>(shape: f64, scale: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(shape > 0.0) || !(scale > 0.0) {
        return Err(HumError::InvalidParameter(format!(
            "weibull shape {shape} and scale {scale} must be positive"
        )));
    }
    Ok((0..n)
        .map(|_| weibull_quantile(1.0 - rng.random::<f64>(), shape, scale))
        .collect())
}

/// Seed of replicate `r`: the master seed XOR the replicate index.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    master ^ replicate
}

/// Dataset for replicate `replicate_index`.
pub fn generate_scenario(cfg: &ScenarioConfig, replicate_index: u64) -> Result<MarkerDataset> {
    cfg.validate()?;
    let sampler = Sampler::new(&cfg.family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(cfg.seed, replicate_index));
    let d = cfg.n_markers();
    let categories = cfg
        .sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut values = Vec::with_capacity(n * d);
            for _ in 0..n {
                sampler.fill_row(j, &mut rng, &mut values);
            }
            values
        })
        .collect();
    MarkerDataset::new(
        categories,
        (1..=d).map(|k| format!("x{k}")).collect(),
        (0..cfg.n_categories() as i64).collect(),
    )
}

/// Optimal direction `Sigma^{-1} delta` for the normal scenarios, anchored
/// at the marker with the smallest mean spacing.
pub fn true_beta_oracle(cfg: &ScenarioConfig) -> Result<Coefficients> {
    let Family::Normal { means, covariance } = &cfg.family else {
        return Err(HumError::InvalidParameter(
            "closed-form truth exists only for normal scenarios".into(),
        ));
    };
    let d = cfg.n_markers();
    let m = means.len();
    let spacing: Vec<f64> = (0..d)
        .map(|k| (means[m - 1][k] - means[0][k]) / (m - 1) as f64)
        .collect();
    let raw = closed_form_direction(&covariance.matrix(d), &DVector::from_vec(spacing.clone()))?;
    let anchor = spacing
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("d >= 1");
    Coefficients::anchored(raw.as_slice(), anchor)
}

/// Truth used for bias columns: the oracle for normal scenarios, the
/// tabulated combination for scenario 4, nothing for custom Weibull setups.
pub fn reference_beta(cfg: &ScenarioConfig) -> Option<Coefficients> {
    match (&cfg.family, cfg.id) {
        (Family::Normal { .. }, _) => true_beta_oracle(cfg).ok(),
        (Family::Weibull { .. }, ScenarioId::Four) => {
            Coefficients::anchored(&SCENARIO4_REFERENCE_BETA, 2).ok()
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationHum {
    pub value: f64,
    pub standard_error: f64,
    pub draws: usize,
}

const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo HUM: the share of independent tuples (one draw per
/// category) that `beta` orders strictly. Chunks use separate ChaCha
/// streams so the result does not depend on the thread count.
pub fn population_hum(cfg: &ScenarioConfig, beta: &[f64], mc_n: usize, seed: u64) -> Result<PopulationHum> {
    if mc_n < 10_000 {
        return Err(HumError::InvalidParameter(
            "population HUM needs at least 1e4 draws".into(),
        ));
    }
    if beta.len() != cfg.n_markers() {
        return Err(HumError::DimensionMismatch {
            expected: cfg.n_markers(),
            actual: beta.len(),
        });
    }
    let sampler = Sampler::new(&cfg.family)?;
    let m = cfg.n_categories();
    let chunks = mc_n.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(mc_n - c * MC_CHUNK);
            let mut row = Vec::with_capacity(beta.len());
            let mut hits = 0u64;
            for _ in 0..count {
                let mut prev = f64::NEG_INFINITY;
                let mut ordered = true;
                for j in 0..m {
                    row.clear();
                    sampler.fill_row(j, &mut rng, &mut row);
                    let v = dot(&row, beta);
                    ordered &= j == 0 || v > prev;
                    prev = v;
                }
                hits += ordered as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / mc_n as f64;
    Ok(PopulationHum {
        value: p,
        standard_error: (p * (1.0 - p) / mc_n as f64).sqrt(),
        draws: mc_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub marker: usize,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub sd: f64,
    /// Replicates that entered the summary.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_ehum: f64,
    pub sd_ehum: f64,
    pub successes: usize,
    pub failures: usize,
    /// In the anchor convention of the reference truth; empty without one.
    pub coefficients: Vec<CoefficientSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub scenario: ScenarioConfig,
    pub replications: usize,
    pub reference_beta: Option<Vec<f64>>,
    pub methods: Vec<MethodSummary>,
    pub warnings: Vec<String>,
    /// Mean wall-clock seconds per fit. Not deterministic, so excluded
    /// from serialized summaries.
    #[serde(skip)]
    pub seconds_per_fit: Vec<(Method, f64)>,
}

type FitOutcome = std::result::Result<(f64, Vec<f64>), String>;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    (mean, sd)
}

/// Runs every method on `cfg.replications` generated datasets.
///
/// Replicates run in parallel; aggregation walks them in index order, so
/// the summary is identical for any thread count.
pub fn run_study(cfg: &ScenarioConfig, methods: &[Method], opts: &FitOptions) -> Result<StudySummary> {
    cfg.validate()?;
    let reference = reference_beta(cfg);
    let reps = cfg.replications;

    let per_rep: Vec<Vec<(FitOutcome, f64)>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let data = generate_scenario(cfg, r);
            methods
                .iter()
                .map(|&method| {
                    let start = Instant::now();
                    let outcome = data
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|d| fit(d, method, opts).map_err(|e| e.to_string()))
                        .map(|rep| (rep.ehum_at_solution, rep.coefficients.beta().to_vec()));
                    (outcome, start.elapsed().as_secs_f64())
                })
                .collect()
        })
        .collect();

    let mut warnings = Vec::new();
    if reps == 1 {
        let msg = "single replicate: standard deviations are reported as 0".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut summaries = Vec::with_capacity(methods.len());
    let mut seconds = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let mut ehums = Vec::with_capacity(reps);
        let mut betas = Vec::with_capacity(reps);
        let mut failures = 0;
        let mut time = 0.0;
        for (r, rep) in per_rep.iter().enumerate() {
            let (outcome, secs) = &rep[mi];
            time += secs;
            match outcome {
                Ok((e, beta)) => {
                    ehums.push(*e);
                    betas.push(beta.clone());
                }
                Err(msg) => {
                    log::warn!("replicate {r}, {method}: {msg}");
                    failures += 1;
                }
            }
        }
        if failures as f64 > MAX_STUDY_FAILURE_RATE * reps as f64 {
            return Err(HumError::StudyUnstable {
                method: method.to_string(),
                failed: failures,
                total: reps,
            });
        }
        let (mean_ehum, sd_ehum) = mean_sd(&ehums);

        let mut coefficients = Vec::new();
        if let (Some(truth), true) = (&reference, method != Method::MinMax) {
            let anchor = truth.anchor().expect("reference is anchored");
            let rescaled: Vec<Vec<f64>> = betas
                .iter()
                .filter_map(|b| Coefficients::anchored(b, anchor).ok())
                .map(|c| c.beta().to_vec())
                .collect();
            if rescaled.len() < betas.len() {
                warnings.push(format!(
                    "{method}: {} replicates had a non-positive coefficient at the reference anchor and were left out of the coefficient summary",
                    betas.len() - rescaled.len()
                ));
            }
            for k in (0..truth.len()).filter(|&k| k != anchor) {
                let xs: Vec<f64> = rescaled.iter().map(|b| b[k]).collect();
                let (mean, sd) = mean_sd(&xs);
                coefficients.push(CoefficientSummary {
                    marker: k,
                    truth: truth.beta()[k],
                    mean,
                    bias: mean - truth.beta()[k],
                    sd,
                    count: xs.len(),
                });
            }
        }
        summaries.push(MethodSummary {
            method,
            mean_ehum,
            sd_ehum,
            successes: ehums.len(),
            failures,
            coefficients,
        });
        seconds.push((method, time / reps as f64));
    }

    Ok(StudySummary {
        scenario: cfg.clone(),
        replications: reps,
        reference_beta: reference.map(|c| c.beta().to_vec()),
        methods: summaries,
        warnings,
        seconds_per_fit: seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mvn_mean_within_clt_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mean = [0.5, -1.0, 2.0];
        let x = sample_mvn(&mean, &DMatrix::identity(3, 3), n, &mut rng).unwrap();
        for k in 0..3 {
            let m = x.iter().skip(k).step_by(3).sum::<f64>() / n as f64;
            assert!((m - mean[k]).abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn mvn_exchangeable_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let cov = CovarianceKind::Exchangeable(0.2).matrix(3);
        let x = sample_mvn(&[0.0; 3], &cov, n, &mut rng).unwrap();
        let mut sample = DMatrix::<f64>::zeros(3, 3);
        for row in x.chunks_exact(3) {
            let v = DVector::from_column_slice(row);
            sample += &v * v.transpose();
        }
        sample /= n as f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let r = sample[(i, j)] / (sample[(i, i)] * sample[(j, j)]).sqrt();
                    assert!((r - 0.2).abs() < 0.02, "{r}");
                }
            }
        }
        assert!((sample - cov).norm() < 0.05);
    }

    #[test]
    fn mvn_rejects_indefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            sample_mvn(&[0.0, 0.0], &bad, 3, &mut rng),
            Err(HumError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn mvn_reproducible() {
        let a = sample_mvn(&[0.0; 2], &DMatrix::identity(2, 2), 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_mvn(&[0.0; 2], &DMatrix::identity(2, 2), 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weibull_moments_and_quantile() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let x = sample_weibull(1.0, 2.0, n, &mut rng).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * 2.0 / (n as f64).sqrt());
        let u = 1.0 - (-1.0f64).exp();
        // 1 - u = e^-1, so -ln(1-u) ... quantile at survival e^-1 is the scale
        assert!((weibull_quantile(1.0 - u, 2.7, 3.5) - 3.5).abs() < 1e-12);
        assert!(sample_weibull(0.0, 1.0, 3, &mut rng).is_err());
        let a = sample_weibull(1.5, 3.0, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_weibull(1.5, 3.0, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_shapes_and_means() {
        let cfg = ScenarioConfig::paper(1, vec![2000, 2000, 2000], 1, 7).unwrap();
        let data = generate_scenario(&cfg, 0).unwrap();
        assert_eq!(data.sizes(), &[2000, 2000, 2000]);
        assert_eq!(data.n_markers(), 3);
        for j in 0..3 {
            for k in 0..3 {
                let col = data.column(j, k);
                let m = col.iter().sum::<f64>() / col.len() as f64;
                assert!((m - SCENARIO_MEANS[j][k]).abs() < 0.1);
            }
        }
        assert_eq!(generate_scenario(&cfg, 3).unwrap(), generate_scenario(&cfg, 3).unwrap());
        assert_ne!(generate_scenario(&cfg, 3).unwrap(), generate_scenario(&cfg, 4).unwrap());
    }

    #[test]
    fn scenario3_covariance_entry() {
        let m = CovarianceKind::Ar1(0.2).matrix(3);
        assert!((m[(0, 2)] - 0.04).abs() < 1e-15);
        assert_eq!(m[(1, 1)], 1.0);
    }

    #[test]
    fn scenario4_scale_by_category() {
        let cfg = ScenarioConfig::paper(4, vec![20_000, 20_000, 20_000], 1, 11).unwrap();
        let data = generate_scenario(&cfg, 0).unwrap();
        // Weibull median = scale * ln(2)^(1/k)
        for (j, &scale) in SCENARIO4_SCALES.iter().enumerate() {
            for (k, &shape) in SCENARIO4_SHAPES.iter().enumerate() {
                let mut col = data.column(j, k);
                col.sort_by(f64::total_cmp);
                let median = col[col.len() / 2];
                let expected = scale * 2f64.ln().powf(1.0 / shape);
                assert!((median / expected - 1.0).abs() < 0.05, "cat {j} marker {k}: {median} vs {expected}");
            }
        }
    }

    #[test]
    fn oracle_table_values() {
        let c1 = true_beta_oracle(&ScenarioConfig::paper(1, vec![1, 1, 1], 1, 0).unwrap()).unwrap();
        assert_eq!(c1.anchor(), Some(0));
        assert!((c1.beta()[1] - 1.1).abs() < 1e-12 && (c1.beta()[2] - 1.2).abs() < 1e-12);
        let c2 = true_beta_oracle(&ScenarioConfig::paper(2, vec![1, 1, 1], 1, 0).unwrap()).unwrap();
        assert!((c2.beta()[1] - 1.189).abs() < 5e-4 && (c2.beta()[2] - 1.378).abs() < 5e-4);
        let c3 = true_beta_oracle(&ScenarioConfig::paper(3, vec![1, 1, 1], 1, 0).unwrap()).unwrap();
        assert!((c3.beta()[1] - 0.903).abs() < 5e-4 && (c3.beta()[2] - 1.256).abs() < 5e-4);
        assert!(true_beta_oracle(&ScenarioConfig::paper(4, vec![1, 1, 1], 1, 0).unwrap()).is_err());
    }

    #[test]
    fn population_hum_degenerate_and_deterministic() {
        let cfg = ScenarioConfig::paper(1, vec![1, 1, 1], 1, 0).unwrap();
        let zero = population_hum(&cfg, &[0.0; 3], 20_000, 1).unwrap();
        assert_eq!(zero.value, 0.0);
        let a = population_hum(&cfg, &[1.0, 1.1, 1.2], 200_000, 3).unwrap();
        let b = population_hum(&cfg, &[1.0, 1.1, 1.2], 200_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(population_hum(&cfg, &[1.0; 3], 100, 1).is_err());
    }

    #[test]
    fn bad_configs() {
        assert!(ScenarioConfig::paper(9, vec![1, 1, 1], 1, 0).is_err());
        assert!(ScenarioConfig::paper(1, vec![1, 1], 1, 0).is_err());
        assert!(ScenarioConfig::paper(1, vec![1, 1, 1], 0, 0).is_err());
    }

    #[test]
    fn single_replicate_study() {
        let cfg = ScenarioConfig::paper(1, vec![15, 15, 15], 1, 5).unwrap();
        let s = run_study(&cfg, &[Method::Naive, Method::Parametric], &FitOptions::default()).unwrap();
        assert_eq!(s.methods.len(), 2);
        assert!(s.methods.iter().all(|m| m.sd_ehum == 0.0));
        assert!(!s.warnings.is_empty());
    }
}
