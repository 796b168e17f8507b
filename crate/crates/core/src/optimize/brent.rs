use super::{finite_or_err, OptimConfig, OptimResult};
use crate::error::Result;

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Scalar maximization over `[-L, L]`.
///
/// A uniform grid of `cfg.grid_points` values locates the best basin (ties
/// go to the point nearest zero); Brent's golden-section/parabolic search
/// then refines inside the neighbouring grid cells. The grid incumbent is
/// returned when refinement does not strictly improve on it.
pub fn brent_maximize_1d<F>(mut f: F, cfg: &OptimConfig) -> Result<OptimResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    let half = cfg.half_width;
    let last = cfg.grid_points - 1;
    let grid_x = |i: usize| -half + (2.0 * half * i as f64) / last as f64;

    let mut values = Vec::with_capacity(cfg.grid_points);
    for i in 0..=last {
        let x = grid_x(i);
        values.push(finite_or_err(f(x)?, &[x])?);
    }
    let mut best = 0;
    for i in 1..=last {
        let better = values[i] > values[best]
            || (values[i] == values[best] && grid_x(i).abs() < grid_x(best).abs());
        if better {
            best = i;
        }
    }
    let lo = grid_x(best.saturating_sub(1));
    let hi = grid_x((best + 1).min(last));
    let (x_ref, v_ref, iterations, converged) = brent_refine(&mut f, lo, hi, cfg)?;

    let (argmax, value) = if v_ref > values[best] {
        (x_ref, v_ref)
    } else {
        (grid_x(best), values[best])
    };
    Ok(OptimResult {
        argmax: vec![argmax],
        value,
        iterations,
        converged,
        gradient_norm: None,
    })
}

/// Brent's localmin on `-f` over `[a, b]`. Returns (x, f(x), iterations,
/// converged).
fn brent_refine<F>(f: &mut F, mut a: f64, mut b: f64, cfg: &OptimConfig) -> Result<(f64, f64, usize, bool)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut neg = |x: f64| -> Result<f64> { Ok(-finite_or_err(f(x)?, &[x])?) };
    let eps = f64::EPSILON.sqrt();
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = neg(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for iter in 0..cfg.max_iterations {
        let m = 0.5 * (a + b);
        let tol = eps * x.abs() + cfg.brent_tolerance / 3.0;
        let t2 = 2.0 * tol;
        if (x - m).abs() <= t2 - 0.5 * (b - a) {
            return Ok((x, -fx, iter, true));
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < t2 || b - u < t2 {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol {
            x + d
        } else if d > 0.0 {
            x + tol
        } else {
            x - tol
        };
        let fu = neg(u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, -fx, cfg.max_iterations, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let r = brent_maximize_1d(|x| Ok(-(x - 1.0) * (x - 1.0)), &OptimConfig::default()).unwrap();
        assert!((r.argmax[0] - 1.0).abs() < 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn off_grid_optimum() {
        let r = brent_maximize_1d(|x| Ok(-(x - 0.123_456).powi(2)), &OptimConfig::default()).unwrap();
        assert!((r.argmax[0] - 0.123_456).abs() < 1e-7);
    }

    #[test]
    fn bimodal_picks_global_basin() {
        let f = |x: f64| -> f64 { (-(x + 5.0).powi(2)).max(1.0 - (x - 5.0).powi(2)) };
        // dense grid oracle
        let (mut bx, mut bv) = (0.0, f64::NEG_INFINITY);
        for i in 0..=200_000 {
            let x = -10.0 + 20.0 * i as f64 / 200_000.0;
            if f(x) > bv {
                bv = f(x);
                bx = x;
            }
        }
        let r = brent_maximize_1d(|x| Ok(f(x)), &OptimConfig::default()).unwrap();
        assert!((r.argmax[0] - bx).abs() < 1e-4);
        assert!((r.argmax[0] - 5.0).abs() < 1e-6);
        assert!(r.value >= bv - 1e-12);
    }

    #[test]
    fn constant_returns_grid_point_nearest_zero() {
        let r = brent_maximize_1d(|_| Ok(3.0), &OptimConfig::default()).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.argmax, vec![0.0]);
    }

    #[test]
    fn grid_contains_zero_exactly() {
        let cfg = OptimConfig::default();
        let mut seen = Vec::new();
        brent_maximize_1d(
            |x| {
                seen.push(x);
                Ok(0.0)
            },
            &cfg,
        )
        .unwrap();
        assert!(seen[..cfg.grid_points].contains(&0.0));
    }

    #[test]
    fn nan_is_an_error() {
        assert!(brent_maximize_1d(|x| Ok(if x > 3.0 { f64::NAN } else { x }), &OptimConfig::default()).is_err());
    }
}
