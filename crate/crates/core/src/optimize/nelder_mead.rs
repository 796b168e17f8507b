use super::{finite_or_err, OptimConfig, OptimResult};
use crate::error::Result;

struct Simplex {
    points: Vec<Vec<f64>>,
    // values of the negated objective
    values: Vec<f64>,
}

impl Simplex {
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        // stable: ties keep their previous relative order
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn diameter(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(best)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0, f64::max)
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Derivative-free simplex maximization of `f`.
///
/// The starting simplex steps each coordinate of `theta0` by
/// `max(0.1, 0.1 |theta0_i|)`. After the first convergence the search is
/// restarted once from the incumbent. Stops when the simplex diameter
/// (sup-norm distance to the best vertex) drops below the configured
/// tolerance, or at the iteration cap.
pub fn nelder_mead_maximize<F>(mut f: F, theta0: &[f64], cfg: &OptimConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let mut neg = |x: &[f64]| -> Result<f64> { Ok(-finite_or_err(f(x)?, x)?) };
    let n = theta0.len();
    let start_value = neg(theta0)?;
    if n == 0 {
        return Ok(OptimResult {
            argmax: Vec::new(),
            value: -start_value,
            iterations: 0,
            converged: true,
            gradient_norm: None,
        });
    }

    let mut best = theta0.to_vec();
    let mut best_value = start_value;
    let mut iterations = 0;
    let mut converged = false;

    for _round in 0..2 {
        let mut simplex = Simplex {
            points: vec![best.clone()],
            values: vec![best_value],
        };
        for i in 0..n {
            let mut p = best.clone();
            p[i] += (0.1 * best[i].abs()).max(0.1);
            simplex.values.push(neg(&p)?);
            simplex.points.push(p);
        }
        simplex.order();
        converged = false;

        while iterations < cfg.max_iterations {
            if simplex.diameter() < cfg.nm_diameter_tolerance {
                converged = true;
                break;
            }
            iterations += 1;
            let worst = n;
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex.points[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
                .collect();
            let reflected = affine(&centroid, &simplex.points[worst], -cfg.nm_reflect);
            let f_r = neg(&reflected)?;

            if f_r < simplex.values[0] {
                let expanded = affine(&centroid, &simplex.points[worst], -cfg.nm_expand);
                let f_e = neg(&expanded)?;
                if f_e < f_r {
                    simplex.points[worst] = expanded;
                    simplex.values[worst] = f_e;
                } else {
                    simplex.points[worst] = reflected;
                    simplex.values[worst] = f_r;
                }
            } else if f_r < simplex.values[n - 1] {
                simplex.points[worst] = reflected;
                simplex.values[worst] = f_r;
            } else {
                let (contracted, bound) = if f_r < simplex.values[worst] {
                    (affine(&centroid, &reflected, cfg.nm_contract), f_r)
                } else {
                    (
                        affine(&centroid, &simplex.points[worst], cfg.nm_contract),
                        simplex.values[worst],
                    )
                };
                let f_c = neg(&contracted)?;
                if f_c < bound {
                    simplex.points[worst] = contracted;
                    simplex.values[worst] = f_c;
                } else {
                    let anchor = simplex.points[0].clone();
                    for i in 1..=n {
                        let p = affine(&anchor, &simplex.points[i], cfg.nm_shrink);
                        simplex.values[i] = neg(&p)?;
                        simplex.points[i] = p;
                    }
                }
            }
            simplex.order();
        }

        if simplex.values[0] < best_value {
            best = simplex.points[0].clone();
            best_value = simplex.values[0];
        }
        if iterations >= cfg.max_iterations {
            break;
        }
    }

    Ok(OptimResult {
        argmax: best,
        value: -best_value,
        iterations,
        converged,
        gradient_norm: None,
    })
}
