use super::{finite_or_err, OptimConfig, OptimResult};
use crate::error::{HumError, Result};

const MAX_BACKTRACKS: usize = 60;

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with Armijo backtracking, maximizing `f`.
///
/// `f` returns the value and gradient at a point. Internally this minimizes
/// `-f`. The inverse-Hessian approximation restarts from a scaled identity
/// whenever the curvature condition `s'y > 0` fails or the search direction
/// is not a descent direction.
pub fn bfgs_maximize<F>(mut f: F, theta0: &[f64], cfg: &OptimConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let n = theta0.len();
    if theta0.iter().any(|v| !v.is_finite()) {
        return Err(HumError::NonFiniteObjective {
            point: theta0.to_vec(),
        });
    }
    let mut eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = f(x)?;
        finite_or_err(v, x)?;
        if g.len() != n {
            return Err(HumError::DimensionMismatch {
                expected: n,
                actual: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(HumError::NonFiniteObjective { point: x.to_vec() });
        }
        // minimize the negation
        Ok((-v, g.into_iter().map(|v| -v).collect()))
    };

    let mut x = theta0.to_vec();
    let (mut fx, mut gx) = eval(&x)?;
    if n == 0 {
        return Ok(OptimResult {
            argmax: x,
            value: -fx,
            iterations: 0,
            converged: true,
            gradient_norm: Some(0.0),
        });
    }
    let identity = |scale: f64| -> Vec<f64> {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut h = identity(1.0);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        if sup_norm(&gx) < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &gx)).collect();
        let mut slope = dot(&gx, &p);
        if !(slope < 0.0) {
            h = identity(1.0);
            fresh = true;
            p = gx.iter().map(|g| -g).collect();
            slope = dot(&gx, &p);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
            let (ft, gt) = eval(&trial)?;
            if ft <= fx + cfg.armijo * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= cfg.backtrack;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // no decrease along a descent direction: numerically stationary
            converged = sup_norm(&gx) < cfg.gradient_tolerance.sqrt();
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let stagnated = (fx - f_new).abs() <= cfg.relative_tolerance * fx.abs().max(1e-300);
        x = x_new;
        fx = f_new;
        gx = g_new;
        if stagnated {
            converged = true;
            break;
        }

        if sy > 0.0 {
            if fresh {
                h = identity(sy / dot(&y, &y));
                fresh = false;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        } else {
            h = identity(1.0);
            fresh = true;
        }
    }

    Ok(OptimResult {
        argmax: x,
        value: -fx,
        iterations,
        converged: converged || sup_norm(&gx) < cfg.gradient_tolerance,
        gradient_norm: Some(sup_norm(&gx)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_1d() {
        let r = bfgs_maximize(
            |x| Ok((-(x[0] - 3.0).powi(2), vec![-2.0 * (x[0] - 3.0)])),
            &[0.0],
            &OptimConfig::default(),
        )
        .unwrap();
        assert!((r.argmax[0] - 3.0).abs() < 1e-8);
        assert!(r.converged);
        assert_eq!(r.value, -(r.argmax[0] - 3.0).powi(2));
    }

    #[test]
    fn concave_quadratics_reach_tolerance() {
        // f = -(x-c)' A (x-c) / 2 with A positive definite
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]];
        let c = [1.0, -2.0, 0.5];
        let f = |x: &[f64]| {
            let r: Vec<f64> = (0..3).map(|i| x[i] - c[i]).collect();
            let ar: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * r[j]).sum()).collect();
            let v = -0.5 * (0..3).map(|i| r[i] * ar[i]).sum::<f64>();
            Ok((v, ar.iter().map(|g| -g).collect()))
        };
        let r = bfgs_maximize(f, &[10.0, 10.0, -10.0], &OptimConfig::default()).unwrap();
        assert!(r.gradient_norm.unwrap() < 1e-6 || r.converged);
        for i in 0..3 {
            assert!((r.argmax[i] - c[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn smooth_nonquadratic() {
        // -log(cosh(x - 1)) - (y + 2)^4: concave, maximum at (1, -2)
        let f = |x: &[f64]| {
            let v = -(x[0] - 1.0).cosh().ln() - (x[1] + 2.0).powi(4);
            Ok((v, vec![-(x[0] - 1.0).tanh(), -4.0 * (x[1] + 2.0).powi(3)]))
        };
        let r = bfgs_maximize(f, &[-3.0, 1.0], &OptimConfig::default()).unwrap();
        assert!((r.argmax[0] - 1.0).abs() < 1e-4);
        assert!((r.argmax[1] + 2.0).abs() < 5e-2);
        assert!(r.converged);
    }

    #[test]
    fn nan_objective_is_an_error() {
        let r = bfgs_maximize(|_| Ok((f64::NAN, vec![0.0])), &[0.0], &OptimConfig::default());
        assert!(matches!(r, Err(HumError::NonFiniteObjective { point }) if point == vec![0.0]));
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let r = bfgs_maximize(|x| Ok((-x[0] * x[0], vec![-2.0 * x[0]])), &[0.0], &OptimConfig::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.argmax, vec![0.0]);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| Ok((-(x[0] - 0.3).powi(4) - x[1].powi(2), vec![-4.0 * (x[0] - 0.3).powi(3), -2.0 * x[1]]));
        let a = bfgs_maximize(f, &[2.0, 1.0], &OptimConfig::default()).unwrap();
        let b = bfgs_maximize(f, &[2.0, 1.0], &OptimConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
