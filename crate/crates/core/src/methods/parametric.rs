//! Normal-theory combination: the closed-form direction `Sigma^{-1} delta`
//! under common covariance and equal mean spacing, and numeric maximization
//! of the Gaussian VUS integral for three categories.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, MarkerDataset};
use crate::error::{HumError, Result};
use crate::optimize::{bfgs_maximize, OptimConfig, OptimResult};
use crate::smooth::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricMode {
    #[default]
    ClosedForm,
    IntegralM3,
}

/// Per-category sample moments plus the pooled covariance and mean spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub pooled: DMatrix<f64>,
    pub spacing: DVector<f64>,
}

impl ParametricModel {
    pub fn estimate(data: &MarkerDataset) -> Result<Self> {
        let d = data.n_markers();
        let m = data.n_categories();
        let mut means = Vec::with_capacity(m);
        let mut covariances = Vec::with_capacity(m);
        let mut pooled = DMatrix::zeros(d, d);
        let mut dof = 0usize;
        for j in 0..m {
            let n = data.sizes()[j];
            let mut mean = DVector::zeros(d);
            for row in data.rows(j) {
                mean += DVector::from_column_slice(row);
            }
            mean /= n as f64;
            let mut scatter = DMatrix::zeros(d, d);
            for row in data.rows(j) {
                let c = DVector::from_column_slice(row) - &mean;
                scatter += &c * c.transpose();
            }
            pooled += &scatter;
            dof += n - 1;
            let cov = if n > 1 { scatter / (n - 1) as f64 } else { scatter };
            means.push(mean);
            covariances.push(cov);
        }
        if dof > 0 {
            pooled /= dof as f64;
        }
        let spacing = (&means[m - 1] - &means[0]) / (m - 1) as f64;
        Ok(Self {
            means,
            covariances,
            pooled,
            spacing,
        })
    }
}

/// Solves `cov x = spacing` by Cholesky.
pub fn closed_form_direction(cov: &DMatrix<f64>, spacing: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = cov.clone().cholesky().ok_or(HumError::SingularCovariance)?;
    let x = chol.solve(spacing);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(HumError::SingularCovariance)
    }
}

/// Anchors at the largest positive component. A direction with no positive
/// component cannot be anchored without reversing it, so it is returned at
/// unit norm instead.
pub(crate) fn anchor_direction(raw: &[f64]) -> Coefficients {
    let (k, &top) = raw
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty direction");
    if top > 0.0 {
        Coefficients::anchored(raw, k).expect("positive pivot")
    } else {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        Coefficients::unanchored(raw.iter().map(|v| v / norm).collect())
    }
}

/// Closed-form coefficients from the pooled plug-in estimates.
pub fn closed_form(data: &MarkerDataset) -> Result<(Coefficients, ParametricModel)> {
    let model = ParametricModel::estimate(data)?;
    if data.total_size() <= data.n_categories() {
        return Err(HumError::SingularCovariance);
    }
    let raw = closed_form_direction(&model.pooled, &model.spacing)?;
    Ok((anchor_direction(raw.as_slice()), model))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule for the Gaussian VUS integral.
#[derive(Debug, Clone)]
pub struct VusQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl VusQuadrature {
    pub const HALF_WIDTH: f64 = 8.0;
    pub const NODES: usize = 201;

    pub fn new() -> Self {
        let (x, w) = gauss_legendre(Self::NODES);
        let h = Self::HALF_WIDTH;
        Self {
            nodes: x.iter().map(|v| v * h).collect(),
            weights: w.iter().map(|v| v * h).collect(),
        }
    }

    /// `P(V1 < V2 < V3)` for independent `Vj ~ N(m_j, s_j^2)`.
    pub fn ordered_normals(&self, m: [f64; 3], s: [f64; 3]) -> f64 {
        let r21 = s[1] / s[0];
        let r23 = s[1] / s[2];
        let c1 = (m[1] - m[0]) / s[0];
        let c3 = (m[2] - m[1]) / s[2];
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * normal_cdf(r21 * u + c1) * normal_cdf(-r23 * u + c3) * normal_pdf(u))
            .sum()
    }

    /// Gaussian VUS of the combination `beta` under the fitted model.
    pub fn vus(&self, model: &ParametricModel, beta: &[f64]) -> Result<f64> {
        if model.means.len() != 3 {
            return Err(HumError::WrongCategoryCount {
                expected: 3,
                actual: model.means.len(),
            });
        }
        let b = DVector::from_column_slice(beta);
        let mut m = [0.0; 3];
        let mut s = [0.0; 3];
        for j in 0..3 {
            m[j] = model.means[j].dot(&b);
            s[j] = (b.transpose() * &model.covariances[j] * &b)[(0, 0)].sqrt();
        }
        if s.iter().any(|v| !(*v > 0.0)) {
            return Err(HumError::NonFiniteObjective { point: beta.to_vec() });
        }
        Ok(self.ordered_normals(m, s))
    }
}

impl Default for VusQuadrature {
    fn default() -> Self {
        Self::new()
    }
}

/// Maximizes the Gaussian VUS over the free coefficients, starting from the
/// closed-form solution. Gradients are central differences.
pub fn integral_m3(data: &MarkerDataset, cfg: &OptimConfig) -> Result<(Coefficients, OptimResult)> {
    if data.n_categories() != 3 {
        return Err(HumError::WrongCategoryCount {
            expected: 3,
            actual: data.n_categories(),
        });
    }
    let (start, model) = closed_form(data)?;
    let anchor = start.anchor().unwrap_or(data.n_markers() - 1);
    let start = match start.anchor() {
        Some(_) => start,
        None => Coefficients::from_theta(&vec![0.0; data.n_markers() - 1], anchor)?,
    };
    let quad = VusQuadrature::new();
    let objective = |theta: &[f64]| -> Result<f64> {
        quad.vus(&model, &crate::data::anchored_to_full(theta, anchor)?)
    };
    let res = bfgs_maximize(
        |theta| {
            let v = objective(theta)?;
            let mut grad = Vec::with_capacity(theta.len());
            let mut probe = theta.to_vec();
            for k in 0..theta.len() {
                let h = 1e-6 * theta[k].abs().max(1.0);
                probe[k] = theta[k] + h;
                let up = objective(&probe)?;
                probe[k] = theta[k] - h;
                let down = objective(&probe)?;
                probe[k] = theta[k];
                grad.push((up - down) / (2.0 * h));
            }
            Ok((v, grad))
        },
        &start.theta(),
        cfg,
    )?;
    Ok((Coefficients::from_theta(&res.argmax, anchor)?, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchangeable(rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { rho })
    }

    fn ar1(rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| rho.powi((i as i32 - j as i32).abs()))
    }

    fn ratios(x: &DVector<f64>) -> Vec<f64> {
        x.iter().map(|v| v / x[0]).collect()
    }

    #[test]
    fn closed_form_directions() {
        let delta = DVector::from_vec(vec![1.0, 1.1, 1.2]);
        let r = ratios(&closed_form_direction(&exchangeable(0.2), &delta).unwrap());
        assert!((r[1] - 1.189).abs() < 5e-4 && (r[2] - 1.378).abs() < 5e-4, "{r:?}");

        let raw = closed_form_direction(&ar1(0.2), &delta).unwrap();
        assert!((raw[0] - 0.8125).abs() < 1e-12);
        assert!((raw[1] - 0.733_333_333_333_333).abs() < 1e-12);
        assert!((raw[2] - 1.020_833_333_333_333).abs() < 1e-12);
        let r = ratios(&raw);
        assert!((r[1] - 0.903).abs() < 5e-4 && (r[2] - 1.256).abs() < 5e-4);

        let ones = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let x = closed_form_direction(&DMatrix::identity(3, 3), &ones).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn singular_covariance_is_reported() {
        let cov = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(
            closed_form_direction(&cov, &DVector::from_vec(vec![1.0, 1.0])),
            Err(HumError::SingularCovariance)
        ));
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree <= 13
        let i12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((i12 - 2.0 / 13.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(201);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    /// Adaptive Simpson on the same integrand over a wider range.
    fn adaptive(m: [f64; 3], s: [f64; 3]) -> f64 {
        let f = |u: f64| {
            normal_cdf(s[1] / s[0] * u + (m[1] - m[0]) / s[0])
                * normal_cdf(-s[1] / s[2] * u + (m[2] - m[1]) / s[2])
                * normal_pdf(u)
        };
        #[allow(clippy::too_many_arguments)]
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (a, b) = (-12.0, 12.0);
        let (fa, fm, fb) = (f(a), f(0.0), f(b));
        simpson(&f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-13, 50)
    }

    #[test]
    fn quadrature_matches_adaptive_reference() {
        let q = VusQuadrature::new();
        let cases = [
            ([0.0, 1.9105, 3.8210], [1.0, 1.0, 1.0]),
            ([0.0, 0.5, 2.0], [1.0, 2.0, 0.7]),
            ([1.0, 1.0, 1.0], [0.3, 1.0, 3.0]),
            ([0.0, 4.0, 8.0], [2.0, 0.5, 1.5]),
        ];
        for (m, s) in cases {
            let a = q.ordered_normals(m, s);
            let b = adaptive(m, s);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // identical distributions: 1/6
        assert!((q.ordered_normals([0.0; 3], [1.0; 3]) - 1.0 / 6.0).abs() < 1e-12);
    }
}
