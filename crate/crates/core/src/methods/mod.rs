//! Fitting methods. Each produces a [`FitReport`] whose EHUM is recomputed
//! from scratch at the reported coefficients.

mod bootstrap;
pub mod parametric;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{project_scores, Coefficients, Kernel, MarkerDataset, SmoothingSpec};
use crate::error::{HumError, Result};
use crate::hum::ehum_fast;
use crate::optimize::{
    brent_maximize_1d, polish_bfgs, polish_nelder_mead, step_down, ObjectiveKind, OptimConfig,
};
use crate::smooth::{default_lambda, lambda_rule_check};

pub use bootstrap::{bootstrap_se, bootstrap_se_anchored, stratified_resample, BootstrapSummary};
pub use parametric::{ParametricMode, ParametricModel};

/// Share of adjacent pairs that should clear the `|diff| / lambda > 5` rule.
pub const LAMBDA_RULE_TARGET: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sshum,
    Nshum,
    Empirical,
    Parametric,
    #[serde(rename = "minmax")]
    MinMax,
    #[serde(rename = "frechet")]
    FrechetUpper,
    FrechetLower,
    Naive,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sshum,
        Method::Nshum,
        Method::Empirical,
        Method::Parametric,
        Method::MinMax,
        Method::FrechetUpper,
        Method::FrechetLower,
        Method::Naive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Sshum => "sshum",
            Method::Nshum => "nshum",
            Method::Empirical => "empirical",
            Method::Parametric => "parametric",
            Method::MinMax => "minmax",
            Method::FrechetUpper => "frechet",
            Method::FrechetLower => "frechet_lower",
            Method::Naive => "naive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HumError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sshum" => Ok(Method::Sshum),
            "nshum" => Ok(Method::Nshum),
            "empirical" => Ok(Method::Empirical),
            "parametric" => Ok(Method::Parametric),
            "minmax" | "min-max" => Ok(Method::MinMax),
            "frechet" | "frechet_upper" | "frechet-upper" => Ok(Method::FrechetUpper),
            "frechet_lower" | "frechet-lower" => Ok(Method::FrechetLower),
            "naive" => Ok(Method::Naive),
            other => Err(HumError::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Settings shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub optim: OptimConfig,
    /// Smoothing bandwidth; `None` uses `1 / sqrt(total n)`.
    pub lambda: Option<f64>,
    pub parametric_mode: ParametricMode,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optim: OptimConfig::default(),
            lambda: None,
            parametric_mode: ParametricMode::ClosedForm,
        }
    }
}

/// Result of one method on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    /// For min-max these are `(beta_max, beta_min)`.
    pub coefficients: Coefficients,
    pub coefficient_names: Vec<String>,
    pub ehum_at_solution: f64,
    /// Value of the criterion the method maximized.
    pub objective_at_solution: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lambda: Option<f64>,
    /// Share of adjacent pairs with `|diff| / lambda > 5` at the solution.
    pub lambda_rule_fraction: Option<f64>,
    /// Marker ranking used by step-down methods.
    pub marker_ordering: Option<Vec<usize>>,
    pub bootstrap: Option<BootstrapSummary>,
}

fn ehum_at(data: &MarkerDataset, beta: &[f64]) -> Result<f64> {
    Ok(ehum_fast(&project_scores(data, beta)?)?.value)
}

/// Runs `method` on `data`.
pub fn fit(data: &MarkerDataset, method: Method, opts: &FitOptions) -> Result<FitReport> {
    match method {
        Method::Sshum => fit_sshum(data, opts),
        Method::Nshum => fit_nshum(data, opts),
        Method::Empirical => fit_empirical(data, opts),
        Method::Parametric => fit_parametric_normal(data, opts, opts.parametric_mode),
        Method::MinMax => fit_minmax(data, opts),
        Method::FrechetUpper => fit_frechet(data, opts, FrechetBound::Upper),
        Method::FrechetLower => fit_frechet(data, opts, FrechetBound::Lower),
        Method::Naive => fit_naive(data),
    }
}

pub fn fit_sshum(data: &MarkerDataset, opts: &FitOptions) -> Result<FitReport> {
    fit_smooth(data, Kernel::Sigmoid, opts)
}

pub fn fit_nshum(data: &MarkerDataset, opts: &FitOptions) -> Result<FitReport> {
    fit_smooth(data, Kernel::NormalCdf, opts)
}

/// Step-down on the smoothed objective, then joint BFGS refinement.
/// The bandwidth stays fixed for the whole fit.
fn fit_smooth(data: &MarkerDataset, kernel: Kernel, opts: &FitOptions) -> Result<FitReport> {
    let lambda = opts.lambda.unwrap_or_else(|| default_lambda(data.total_size()));
    let spec = SmoothingSpec::new(kernel, lambda)?;
    let kind = ObjectiveKind::Smooth(spec);
    let sd = step_down(data, kind, &opts.optim)?;
    let anchor = sd.coefficients.anchor().expect("step-down anchors");
    let polished = polish_bfgs(data, kind, &sd.coefficients, &opts.optim)?;
    let coefficients = Coefficients::from_theta(&polished.argmax, anchor)?;
    let rule = lambda_rule_check(data, coefficients.beta(), lambda)?;
    if rule < LAMBDA_RULE_TARGET {
        log::info!(
            "lambda = {lambda:.4}: only {:.1}% of adjacent pairs satisfy |diff|/lambda > 5",
            100.0 * rule
        );
    }
    Ok(FitReport {
        method: if kernel == Kernel::Sigmoid { Method::Sshum } else { Method::Nshum },
        ehum_at_solution: ehum_at(data, coefficients.beta())?,
        objective_at_solution: polished.value,
        coefficient_names: data.marker_names().to_vec(),
        coefficients,
        iterations: sd.iterations + polished.iterations,
        converged: polished.converged,
        lambda: Some(lambda),
        lambda_rule_fraction: Some(rule),
        marker_ordering: Some(sd.ordering),
        bootstrap: None,
    })
}

/// Step-down with scalar searches on the empirical HUM, then a Nelder-Mead
/// pass over all free coefficients.
pub fn fit_empirical(data: &MarkerDataset, opts: &FitOptions) -> Result<FitReport> {
    fit_stepdown_nonsmooth(data, ObjectiveKind::Empirical, Method::Empirical, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrechetBound {
    Upper,
    Lower,
}

/// Maximizes the minimum adjacent AUC (upper bound) or the mean adjacent
/// AUC (lower bound); EHUM is reported at the solution.
pub fn fit_frechet(data: &MarkerDataset, opts: &FitOptions, bound: FrechetBound) -> Result<FitReport> {
    match bound {
        FrechetBound::Upper => {
            fit_stepdown_nonsmooth(data, ObjectiveKind::FrechetUpper, Method::FrechetUpper, opts)
        }
        FrechetBound::Lower => {
            fit_stepdown_nonsmooth(data, ObjectiveKind::FrechetLower, Method::FrechetLower, opts)
        }
    }
}

fn fit_stepdown_nonsmooth(
    data: &MarkerDataset,
    kind: ObjectiveKind,
    method: Method,
    opts: &FitOptions,
) -> Result<FitReport> {
    let sd = step_down(data, kind, &opts.optim)?;
    let anchor = sd.coefficients.anchor().expect("step-down anchors");
    let polished = polish_nelder_mead(data, kind, &sd.coefficients, &opts.optim)?;
    let coefficients = Coefficients::from_theta(&polished.argmax, anchor)?;
    Ok(FitReport {
        method,
        ehum_at_solution: ehum_at(data, coefficients.beta())?,
        objective_at_solution: polished.value,
        coefficient_names: data.marker_names().to_vec(),
        coefficients,
        iterations: sd.iterations + polished.iterations,
        converged: polished.converged,
        lambda: None,
        lambda_rule_fraction: None,
        marker_ordering: Some(sd.ordering),
        bootstrap: None,
    })
}

/// Normal-theory method: closed-form `Sigma^{-1} delta` or numeric
/// maximization of the Gaussian VUS (three categories only).
pub fn fit_parametric_normal(
    data: &MarkerDataset,
    opts: &FitOptions,
    mode: ParametricMode,
) -> Result<FitReport> {
    let (coefficients, objective, iterations, converged) = match mode {
        ParametricMode::ClosedForm => {
            let (coefficients, model) = parametric::closed_form(data)?;
            let objective = if data.n_categories() == 3 {
                parametric::VusQuadrature::new().vus(&model, coefficients.beta())?
            } else {
                f64::NAN
            };
            (coefficients, objective, 0, true)
        }
        ParametricMode::IntegralM3 => {
            let (coefficients, res) = parametric::integral_m3(data, &opts.optim)?;
            (coefficients, res.value, res.iterations, res.converged)
        }
    };
    Ok(FitReport {
        method: Method::Parametric,
        ehum_at_solution: ehum_at(data, coefficients.beta())?,
        objective_at_solution: objective,
        coefficient_names: data.marker_names().to_vec(),
        coefficients,
        iterations,
        converged,
        lambda: None,
        lambda_rule_fraction: None,
        marker_ordering: None,
        bootstrap: None,
    })
}

/// Per-subject maximum and minimum marker, as a two-column dataset
/// `(max, min)`.
pub fn minmax_dataset(data: &MarkerDataset) -> Result<MarkerDataset> {
    let categories = (0..data.n_categories())
        .map(|j| {
            data.rows(j)
                .flat_map(|r| {
                    let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
                    [hi, lo]
                })
                .collect()
        })
        .collect();
    MarkerDataset::new(
        categories,
        vec!["max".into(), "min".into()],
        data.category_labels().to_vec(),
    )
}

/// Combines each subject's largest and smallest marker as
/// `max + beta_min * min` and picks `beta_min` by scalar search on EHUM.
pub fn fit_minmax(data: &MarkerDataset, opts: &FitOptions) -> Result<FitReport> {
    if data.n_markers() < 2 {
        return Err(HumError::InvalidParameter(
            "min-max combination needs at least two markers".into(),
        ));
    }
    let mm = minmax_dataset(data)?;
    let res = brent_maximize_1d(|b| ehum_at(&mm, &[1.0, b]), &opts.optim)?;
    let coefficients = Coefficients::from_theta(&res.argmax, 0)?;
    Ok(FitReport {
        method: Method::MinMax,
        ehum_at_solution: ehum_at(&mm, coefficients.beta())?,
        objective_at_solution: res.value,
        coefficient_names: mm.marker_names().to_vec(),
        coefficients,
        iterations: res.iterations,
        converged: res.converged,
        lambda: None,
        lambda_rule_fraction: None,
        marker_ordering: None,
        bootstrap: None,
    })
}

/// Equal unit-norm weights `1 / sqrt(d)`; no optimization.
pub fn fit_naive(data: &MarkerDataset) -> Result<FitReport> {
    let d = data.n_markers();
    let w = 1.0 / (d as f64).sqrt();
    let coefficients = Coefficients::unanchored(vec![w; d]);
    let ehum = ehum_at(data, coefficients.beta())?;
    Ok(FitReport {
        method: Method::Naive,
        ehum_at_solution: ehum,
        objective_at_solution: ehum,
        coefficient_names: data.marker_names().to_vec(),
        coefficients,
        iterations: 0,
        converged: true,
        lambda: None,
        lambda_rule_fraction: None,
        marker_ordering: None,
        bootstrap: None,
    })
}

/// Scores that a report's coefficients assign to each subject.
pub fn report_scores(data: &MarkerDataset, report: &FitReport) -> Result<Vec<Vec<f64>>> {
    match report.method {
        Method::MinMax => project_scores(&minmax_dataset(data)?, report.coefficients.beta()),
        _ => project_scores(data, report.coefficients.beta()),
    }
}

#[cfg(test)]
mod tests;
