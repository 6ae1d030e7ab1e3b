//! Numerical substrate: normal special functions, truncated moments of the
//! unit-variance normal, bracketed root finding and local likelihood
//! maximisation.

mod mle;
mod optimize;
mod root;
mod special;
pub(crate) mod truncated;

pub use mle::{maximize_loglik, MleFit};
pub use optimize::{nelder_mead, NelderMeadResult};
pub use root::find_root_monotone;
pub use special::{std_normal_cdf, std_normal_pdf, std_normal_sf};
pub use truncated::{truncated_first_moment, truncated_mass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping rule shared by the iterative numerical routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    abs_tol: f64,
    rel_tol: f64,
    max_eval: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_eval: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::InvalidTolerance(format!("abs_tol must be > 0, got {abs_tol}")));
        }
        if !(rel_tol >= 0.0) {
            return Err(Error::InvalidTolerance(format!("rel_tol must be >= 0, got {rel_tol}")));
        }
        if max_eval == 0 {
            return Err(Error::InvalidTolerance("max_eval must be >= 1".into()));
        }
        Ok(Self { abs_tol, rel_tol, max_eval })
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_eval(&self) -> usize {
        self.max_eval
    }

    /// Width below which a bracket around `x` counts as resolved.
    pub(crate) fn width_at(&self, x: f64) -> f64 {
        self.abs_tol + self.rel_tol * x.abs()
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 0.0, max_eval: 200 }
    }
}
