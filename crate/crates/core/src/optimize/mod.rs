//! Maximizers: BFGS for smooth objectives, Nelder-Mead for non-smooth
//! ones, a grid-seeded Brent search for scalar problems, and the step-down
//! composition that builds a combination one marker at a time.

mod bfgs;
mod brent;
mod nelder_mead;
mod stepdown;

use serde::{Deserialize, Serialize};

use crate::error::{HumError, Result};

pub use bfgs::bfgs_maximize;
pub use brent::brent_maximize_1d;
pub use nelder_mead::nelder_mead_maximize;
pub use stepdown::{polish_bfgs, polish_nelder_mead, step_down, ObjectiveKind, StepDownResult};

/// Stopping rules and algorithm constants shared by all optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iterations: usize,
    /// Sup-norm of the gradient below which BFGS stops.
    pub gradient_tolerance: f64,
    /// Relative change of the objective below which BFGS stops.
    pub relative_tolerance: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub nm_reflect: f64,
    pub nm_expand: f64,
    pub nm_contract: f64,
    pub nm_shrink: f64,
    /// Simplex diameter below which Nelder-Mead stops.
    pub nm_diameter_tolerance: f64,
    /// Scalar searches run over `[-half_width, half_width]`.
    pub half_width: f64,
    pub grid_points: usize,
    /// Final bracket width for the scalar refinement.
    pub brent_tolerance: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            relative_tolerance: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            nm_reflect: 1.0,
            nm_expand: 2.0,
            nm_contract: 0.5,
            nm_shrink: 0.5,
            nm_diameter_tolerance: 1e-8,
            half_width: 10.0,
            grid_points: 101,
            brent_tolerance: 1e-8,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_tolerance", self.gradient_tolerance),
            ("relative_tolerance", self.relative_tolerance),
            ("armijo", self.armijo),
            ("nm_diameter_tolerance", self.nm_diameter_tolerance),
            ("half_width", self.half_width),
            ("brent_tolerance", self.brent_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(HumError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(HumError::InvalidParameter(
                "backtracking factor must lie in (0, 1)".into(),
            ));
        }
        if self.grid_points < 2 {
            return Err(HumError::InvalidParameter("grid needs at least two points".into()));
        }
        Ok(())
    }
}

/// Outcome of a maximization. `value` is always the objective evaluated at
/// `argmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: Option<f64>,
}

pub(crate) fn finite_or_err(value: f64, point: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(HumError::NonFiniteObjective {
            point: point.to_vec(),
        })
    }
}
