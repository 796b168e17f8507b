//! Smoothed HUM objective and its gradient.
//!
//! The smoothed objective replaces each indicator `I(v_{j+1} > v_j)` in the
//! EHUM sum with a kernel `g(v_{j+1} - v_j)`. Because the summand is a
//! product over adjacent category pairs only, the `prod n_j` tuple sum
//! factorizes into a chain of matrix-vector products:
//!
//! ```text
//! D = 1' A_{M-1} ... A_1 1 / prod n_j,    A_j[a, b] = g(v_{j+1,a} - v_{j,b})
//! ```
//!
//! Forward (prefix) vectors `w_j` and backward (suffix) vectors `u_j` give
//! the gradient with one extra pass per adjacent pair.

use crate::data::{project_scores, Kernel, MarkerDataset, SmoothingSpec};
use crate::error::{HumError, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(HumError::NonPositiveLambda(lambda))
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn sigmoid_slope(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Standard normal CDF, via the complementary error function so both tails
/// keep full relative precision.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

#[inline]
fn eval_unchecked(kind: Kernel, x: f64, lambda: f64) -> f64 {
    let z = x / lambda;
    match kind {
        Kernel::Sigmoid => sigmoid(z),
        Kernel::NormalCdf => normal_cdf(z),
    }
}

#[inline]
fn deriv_unchecked(kind: Kernel, x: f64, lambda: f64) -> f64 {
    let z = x / lambda;
    match kind {
        Kernel::Sigmoid => sigmoid_slope(z) / lambda,
        Kernel::NormalCdf => normal_pdf(z) / lambda,
    }
}

/// `g(x / lambda)` for the chosen kernel.
pub fn kernel_eval(kind: Kernel, x: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(eval_unchecked(kind, x, lambda))
}

/// `d/dx g(x / lambda)`, including the `1 / lambda` factor.
pub fn kernel_deriv(kind: Kernel, x: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(deriv_unchecked(kind, x, lambda))
}

/// `1 / sqrt(n_total)`.
pub fn default_lambda(n_total: usize) -> f64 {
    1.0 / (n_total.max(1) as f64).sqrt()
}

/// Fraction of adjacent-category cross pairs with `|beta'(x_{j+1} - x_j)| / lambda > 5`,
/// i.e. pairs on which the kernel is already close to an indicator.
pub fn lambda_rule_check(data: &MarkerDataset, beta: &[f64], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let scores = project_scores(data, beta)?;
    let mut hit: u64 = 0;
    let mut total: u64 = 0;
    for w in scores.windows(2) {
        for &hi in &w[1] {
            for &lo in &w[0] {
                total += 1;
                if ((hi - lo) / lambda).abs() > 5.0 {
                    hit += 1;
                }
            }
        }
    }
    Ok(hit as f64 / total as f64)
}

/// Kernel matrices and chain vectors for one objective evaluation.
///
/// `adjacency[j]` is `n_{j+1} x n_j` row-major; `forward[j]` has length
/// `n_j` and `backward[j]` length `n_j`. Each evaluation owns its workspace.
#[derive(Debug, Clone)]
pub struct ChainWorkspace {
    sizes: Vec<usize>,
    adjacency: Vec<Vec<f64>>,
    slopes: Option<Vec<Vec<f64>>>,
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    n_tuples: f64,
}

impl ChainWorkspace {
    /// Builds kernel matrices from projected scores. Slopes are only
    /// stored when `with_slopes` is set.
    pub fn build<S: AsRef<[f64]>>(scores: &[S], spec: SmoothingSpec, with_slopes: bool) -> Result<Self> {
        check_lambda(spec.lambda)?;
        if scores.len() < 2 {
            return Err(HumError::FewerThanTwoCategories(scores.len()));
        }
        let sizes: Vec<usize> = scores.iter().map(|s| s.as_ref().len()).collect();
        if let Some(j) = sizes.iter().position(|&n| n == 0) {
            return Err(HumError::EmptyCategory(j));
        }
        let m = scores.len();
        let mut adjacency = Vec::with_capacity(m - 1);
        let mut slopes = with_slopes.then(|| Vec::with_capacity(m - 1));
        for j in 0..m - 1 {
            let lo = scores[j].as_ref();
            let hi = scores[j + 1].as_ref();
            let mut a = Vec::with_capacity(lo.len() * hi.len());
            for &h in hi {
                for &l in lo {
                    a.push(eval_unchecked(spec.kernel, h - l, spec.lambda));
                }
            }
            if let Some(s) = slopes.as_mut() {
                let mut d = Vec::with_capacity(lo.len() * hi.len());
                for &h in hi {
                    for &l in lo {
                        d.push(deriv_unchecked(spec.kernel, h - l, spec.lambda));
                    }
                }
                s.push(d);
            }
            adjacency.push(a);
        }

        let mut forward = Vec::with_capacity(m);
        forward.push(vec![1.0; sizes[0]]);
        for j in 0..m - 1 {
            let next = mat_vec(&adjacency[j], sizes[j + 1], sizes[j], &forward[j]);
            forward.push(next);
        }
        let mut backward = vec![Vec::new(); m];
        backward[m - 1] = vec![1.0; sizes[m - 1]];
        for j in (0..m - 1).rev() {
            backward[j] = mat_t_vec(&adjacency[j], sizes[j + 1], sizes[j], &backward[j + 1]);
        }
        let n_tuples = sizes.iter().map(|&n| n as f64).product();
        Ok(Self {
            sizes,
            adjacency,
            slopes,
            forward,
            backward,
            n_tuples,
        })
    }

    /// Smoothed HUM from the full forward pass.
    pub fn value(&self) -> f64 {
        self.forward.last().expect("m >= 2").iter().sum::<f64>() / self.n_tuples
    }

    /// The same value recombined at category `j`: `w_j . u_j / prod n`.
    pub fn value_split_at(&self, j: usize) -> f64 {
        self.forward[j]
            .iter()
            .zip(&self.backward[j])
            .map(|(w, u)| w * u)
            .sum::<f64>()
            / self.n_tuples
    }

    pub fn adjacency(&self, j: usize) -> &[f64] {
        &self.adjacency[j]
    }

    /// Gradient of the value with respect to the full coefficient vector.
    ///
    /// For the pair `(j, j+1)` the weight of cell `(a, b)` is
    /// `q = u_{j+1}[a] g'(.) w_j[b]`; its contribution to coordinate `k` is
    /// `q (x_{j+1,a,k} - x_{j,b,k})`, which separates into row and column
    /// sums of `q`.
    pub fn gradient_full(&self, data: &MarkerDataset) -> Result<Vec<f64>> {
        let slopes = self
            .slopes
            .as_ref()
            .ok_or_else(|| HumError::InvalidParameter("workspace built without slopes".into()))?;
        if data.sizes() != self.sizes.as_slice() {
            return Err(HumError::DimensionMismatch {
                expected: self.sizes.len(),
                actual: data.n_categories(),
            });
        }
        let d = data.n_markers();
        let mut grad = vec![0.0; d];
        for j in 0..self.sizes.len() - 1 {
            let (n_lo, n_hi) = (self.sizes[j], self.sizes[j + 1]);
            let w = &self.forward[j];
            let u = &self.backward[j + 1];
            let slope = &slopes[j];
            let mut row_sums = vec![0.0; n_hi];
            let mut col_sums = vec![0.0; n_lo];
            for a in 0..n_hi {
                let row = &slope[a * n_lo..(a + 1) * n_lo];
                let mut acc = 0.0;
                for b in 0..n_lo {
                    let q = row[b] * w[b];
                    acc += q;
                    col_sums[b] += q * u[a];
                }
                row_sums[a] = acc * u[a];
            }
            for (a, x) in data.rows(j + 1).enumerate() {
                for k in 0..d {
                    grad[k] += row_sums[a] * x[k];
                }
            }
            for (b, x) in data.rows(j).enumerate() {
                for k in 0..d {
                    grad[k] -= col_sums[b] * x[k];
                }
            }
        }
        for g in &mut grad {
            *g /= self.n_tuples;
        }
        Ok(grad)
    }
}

fn mat_vec(a: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            a[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(p, q)| p * q)
                .sum()
        })
        .collect()
}

fn mat_t_vec(a: &[f64], rows: usize, cols: usize, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        let yr = y[r];
        for (o, p) in out.iter_mut().zip(&a[r * cols..(r + 1) * cols]) {
            *o += p * yr;
        }
    }
    out
}

/// Smoothed HUM of already-projected scores.
pub fn shum_of_scores<S: AsRef<[f64]>>(scores: &[S], spec: SmoothingSpec) -> Result<f64> {
    Ok(ChainWorkspace::build(scores, spec, false)?.value())
}

/// Smoothed HUM `D_g(beta)`.
pub fn shum_value(data: &MarkerDataset, beta: &[f64], spec: SmoothingSpec) -> Result<f64> {
    let scores = project_scores(data, beta)?;
    shum_of_scores(&scores, spec)
}

/// Smoothed HUM and its gradient with respect to the free coefficients
/// (every coordinate except `anchor_index`, in original order).
pub fn shum_value_and_gradient(
    data: &MarkerDataset,
    beta: &[f64],
    spec: SmoothingSpec,
    anchor_index: usize,
) -> Result<(f64, Vec<f64>)> {
    if anchor_index >= data.n_markers() {
        return Err(HumError::IndexOutOfRange {
            index: anchor_index,
            len: data.n_markers(),
        });
    }
    let scores = project_scores(data, beta)?;
    let ws = ChainWorkspace::build(&scores, spec, true)?;
    let full = ws.gradient_full(data)?;
    let free = full
        .into_iter()
        .enumerate()
        .filter(|&(k, _)| k != anchor_index)
        .map(|(_, g)| g)
        .collect();
    Ok((ws.value(), free))
}

/// Gradient of the smoothed HUM with respect to the free coefficients.
pub fn shum_gradient(
    data: &MarkerDataset,
    beta: &[f64],
    spec: SmoothingSpec,
    anchor_index: usize,
) -> Result<Vec<f64>> {
    Ok(shum_value_and_gradient(data, beta, spec, anchor_index)?.1)
}
