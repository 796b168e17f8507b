//! Optimal linear combinations of biomarkers for ordered multi-category
//! diagnosis, found by maximizing smoothed versions of the empirical
//! hyper-volume under the ROC manifold (HUM).
//!
//! - [`hum`]: exact empirical HUM, AUC and Fréchet bounds.
//! - [`smooth`]: sigmoid / normal-CDF smoothed HUM and its gradient.
//! - [`optimize`]: BFGS, Nelder-Mead, grid-seeded Brent and step-down.
//! - [`methods`]: the fitting methods and bootstrap standard errors.
//! - [`simulate`]: scenario generators and the replication harness.

pub mod data;
pub mod error;
pub mod hum;
pub mod methods;
pub mod optimize;
pub mod simulate;
pub mod smooth;

pub use data::{
    anchored_to_full, extract_theta, load_csv, project_scores, write_csv, Coefficients, CsvLoad,
    Kernel, MarkerDataset, SmoothingSpec,
};
pub use error::{HumError, Result};
pub use methods::{fit, FitOptions, FitReport, Method};
