use serde::{Deserialize, Serialize};

use super::{bfgs_maximize, brent_maximize_1d, nelder_mead_maximize, OptimConfig, OptimResult};
use crate::data::{project_scores, Coefficients, MarkerDataset, SmoothingSpec};
use crate::error::{HumError, Result};
use crate::hum::{ehum_fast, frechet_mean_auc, frechet_upper};
use crate::smooth::{shum_of_scores, shum_value_and_gradient};

/// Criterion maximized by the step-down search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Smoothed HUM with the given kernel and bandwidth.
    Smooth(SmoothingSpec),
    /// Empirical HUM.
    Empirical,
    /// Minimum adjacent-pair AUC.
    FrechetUpper,
    /// Mean adjacent-pair AUC; maximizing it maximizes the lower bound.
    FrechetLower,
}

impl ObjectiveKind {
    pub fn is_smooth(&self) -> bool {
        matches!(self, ObjectiveKind::Smooth(_))
    }

    pub fn evaluate_scores<S: AsRef<[f64]>>(&self, scores: &[S]) -> Result<f64> {
        match self {
            ObjectiveKind::Smooth(spec) => shum_of_scores(scores, *spec),
            ObjectiveKind::Empirical => Ok(ehum_fast(scores)?.value),
            ObjectiveKind::FrechetUpper => frechet_upper(scores),
            ObjectiveKind::FrechetLower => frechet_mean_auc(scores),
        }
    }

    pub fn evaluate(&self, data: &MarkerDataset, beta: &[f64]) -> Result<f64> {
        self.evaluate_scores(&project_scores(data, beta)?)
    }
}

/// Output of [`step_down`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDownResult {
    /// Anchored at the best individual marker.
    pub coefficients: Coefficients,
    pub value: f64,
    /// Marker indices sorted by decreasing individual objective.
    pub ordering: Vec<usize>,
    /// Individual objective of each marker, in original order.
    pub individual_values: Vec<f64>,
    /// Objective after each stage: the best single marker, then after each
    /// added marker.
    pub stage_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Greedy one-marker-at-a-time maximization.
///
/// Markers are ranked by their individual objective (ties keep column
/// order). Starting from the best marker with coefficient 1, each next
/// marker enters with a coefficient chosen by [`brent_maximize_1d`]. Since
/// every scalar search includes zero on its grid, the stage values never
/// decrease.
pub fn step_down(data: &MarkerDataset, kind: ObjectiveKind, cfg: &OptimConfig) -> Result<StepDownResult> {
    cfg.validate()?;
    let d = data.n_markers();
    let mut individual_values = Vec::with_capacity(d);
    for k in 0..d {
        let mut unit = vec![0.0; d];
        unit[k] = 1.0;
        individual_values.push(kind.evaluate(data, &unit)?);
    }
    let mut ordering: Vec<usize> = (0..d).collect();
    ordering.sort_by(|&a, &b| individual_values[b].total_cmp(&individual_values[a]));

    let lead = ordering[0];
    let mut beta = vec![0.0; d];
    beta[lead] = 1.0;
    let mut stage_values = vec![individual_values[lead]];
    let mut iterations = 0;
    let mut converged = true;

    for &k in &ordering[1..] {
        let mut trial = beta.clone();
        let res = brent_maximize_1d(
            |lambda| {
                trial[k] = lambda;
                kind.evaluate(data, &trial)
            },
            cfg,
        )?;
        beta[k] = res.argmax[0];
        stage_values.push(res.value);
        iterations += res.iterations;
        converged &= res.converged;
    }

    let value = kind.evaluate(data, &beta)?;
    Ok(StepDownResult {
        coefficients: Coefficients::anchored(&beta, lead)?,
        value,
        ordering,
        individual_values,
        stage_values,
        iterations,
        converged,
    })
}

/// Joint BFGS refinement of all free coefficients from `init`, keeping the
/// anchor fixed. Returns whichever of `init` and the BFGS solution scores
/// higher; `argmax` holds the free coefficients.
pub fn polish_bfgs(
    data: &MarkerDataset,
    kind: ObjectiveKind,
    init: &Coefficients,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    let ObjectiveKind::Smooth(spec) = kind else {
        return Err(HumError::SmoothObjectiveRequired);
    };
    let anchor = init
        .anchor()
        .ok_or_else(|| HumError::InvalidParameter("polish needs an anchored start".into()))?;
    let theta0 = init.theta();
    let start_value = kind.evaluate(data, init.beta())?;
    let res = bfgs_maximize(
        |theta| {
            let beta = crate::data::anchored_to_full(theta, anchor)?;
            shum_value_and_gradient(data, &beta, spec, anchor)
        },
        &theta0,
        cfg,
    )?;
    if res.value >= start_value {
        Ok(res)
    } else {
        Ok(OptimResult {
            argmax: theta0,
            value: start_value,
            iterations: res.iterations,
            converged: res.converged,
            gradient_norm: res.gradient_norm,
        })
    }
}

/// Nelder-Mead refinement of the free coefficients, for any objective.
/// Never returns something worse than `init`.
pub fn polish_nelder_mead(
    data: &MarkerDataset,
    kind: ObjectiveKind,
    init: &Coefficients,
    cfg: &OptimConfig,
) -> Result<OptimResult> {
    let anchor = init
        .anchor()
        .ok_or_else(|| HumError::InvalidParameter("polish needs an anchored start".into()))?;
    nelder_mead_maximize(
        |theta| kind.evaluate(data, &crate::data::anchored_to_full(theta, anchor)?),
        &init.theta(),
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy(rng: &mut ChaCha8Rng, n: usize, shifts: &[f64]) -> MarkerDataset {
        let rows: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|j| {
                (0..n)
                    .map(|_| {
                        shifts
                            .iter()
                            .map(|s| s * j as f64 + rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        MarkerDataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn single_marker() {
        let data = MarkerDataset::from_rows(&[vec![vec![0.0], vec![2.0]], vec![vec![1.0]], vec![vec![3.0]]]).unwrap();
        let r = step_down(&data, ObjectiveKind::Empirical, &OptimConfig::default()).unwrap();
        assert_eq!(r.coefficients.beta(), &[1.0]);
        assert_eq!(r.value, r.individual_values[0]);
        assert_eq!(r.value, 0.5);
    }

    #[test]
    fn noise_marker_gets_small_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|j| {
                (0..30)
                    .map(|i| vec![10.0 * j as f64 + i as f64 * 0.1, rng.random::<f64>()])
                    .collect()
            })
            .collect();
        let data = MarkerDataset::from_rows(&rows).unwrap();
        let r = step_down(&data, ObjectiveKind::Empirical, &OptimConfig::default()).unwrap();
        assert_eq!(r.ordering[0], 0);
        assert!(r.coefficients.beta()[1].abs() < 0.5);
        assert!(r.value >= r.individual_values[0] - 0.01);
    }

    #[test]
    fn stage_values_never_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = SmoothingSpec::new(Kernel::Sigmoid, 0.1).unwrap();
        for kind in [
            ObjectiveKind::Smooth(spec),
            ObjectiveKind::Empirical,
            ObjectiveKind::FrechetUpper,
            ObjectiveKind::FrechetLower,
        ] {
            let data = noisy(&mut rng, 15, &[1.0, 1.1, 1.2]);
            let r = step_down(&data, kind, &OptimConfig::default()).unwrap();
            assert!(r.stage_values.windows(2).all(|w| w[1] >= w[0]), "{kind:?}: {:?}", r.stage_values);
            let best = r.individual_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(r.value >= best);
            assert_eq!(r.value, *r.stage_values.last().unwrap());
            assert_eq!(r.value, kind.evaluate(&data, r.coefficients.beta()).unwrap());
        }
    }

    #[test]
    fn polish_requires_smooth() {
        let data = MarkerDataset::from_rows(&[vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]]).unwrap();
        let init = Coefficients::from_theta(&[0.0], 0).unwrap();
        assert!(matches!(
            polish_bfgs(&data, ObjectiveKind::Empirical, &init, &OptimConfig::default()),
            Err(HumError::SmoothObjectiveRequired)
        ));
    }

    #[test]
    fn polish_improves_perturbed_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = noisy(&mut rng, 25, &[1.0, 1.1, 1.2]);
        let kind = ObjectiveKind::Smooth(SmoothingSpec::new(Kernel::Sigmoid, 0.2).unwrap());
        let cfg = OptimConfig::default();
        let sd = step_down(&data, kind, &cfg).unwrap();
        let polished = polish_bfgs(&data, kind, &sd.coefficients, &cfg).unwrap();
        assert!(polished.value >= sd.value);

        let anchor = sd.coefficients.anchor().unwrap();
        let stationary = Coefficients::from_theta(&polished.argmax, anchor).unwrap();
        let again = polish_bfgs(&data, kind, &stationary, &cfg).unwrap();
        assert!(again.value >= polished.value);
        if polished.gradient_norm.unwrap() < cfg.gradient_tolerance {
            assert_eq!(again.iterations, 0);
            assert_eq!(again.argmax, polished.argmax);
        }

        let jittered: Vec<f64> = polished.argmax.iter().map(|t| t + 0.3).collect();
        let start = Coefficients::from_theta(&jittered, anchor).unwrap();
        let back = polish_bfgs(&data, kind, &start, &cfg).unwrap();
        assert!(back.value >= kind.evaluate(&data, start.beta()).unwrap());
    }

    #[test]
    fn deterministic_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = noisy(&mut rng, 20, &[1.0, 0.5, 0.8]);
        let kind = ObjectiveKind::Smooth(SmoothingSpec::new(Kernel::NormalCdf, 0.15).unwrap());
        let a = step_down(&data, kind, &OptimConfig::default()).unwrap();
        let b = step_down(&data, kind, &OptimConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
