//! Worked targets: Gaussian mixtures, Bayesian logistic, Huber and
//! Student's t regression posteriors, and the underdamped joint target.

mod gmm;
mod huber;
mod logistic;
mod studentt;
mod underdamped;

pub use gmm::{gmm_sample, GaussianMixture};
pub use huber::HuberRegression;
pub use logistic::LogisticRegression;
pub use studentt::{riemannian_spec_pseudo_huber, riemannian_spec_pseudo_huber_scaled, StudentTRegression};
pub use underdamped::Underdamped;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A symmetric positive definite matrix with its inverse and log
/// determinant, factored once.
#[derive(Clone, Debug)]
pub(crate) struct SpdMatrix {
    pub(crate) matrix: DMatrix<f64>,
    pub(crate) inverse: DMatrix<f64>,
    pub(crate) chol_lower: DMatrix<f64>,
    pub(crate) log_det: f64,
}

impl SpdMatrix {
    pub(crate) fn new(matrix: DMatrix<f64>, what: &str) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidParameter(format!("{what} must be square")));
        }
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * (1.0 + matrix.abs().max()) {
            return Err(Error::InvalidParameter(format!("{what} must be symmetric")));
        }
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter(format!("{what} is not positive definite")))?;
        let chol_lower = chol.l();
        let log_det = 2.0 * chol_lower.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let inverse = chol.inverse();
        Ok(Self {
            matrix,
            inverse,
            chol_lower,
            log_det,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub(crate) fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Checks a minibatch index list against `l` data terms.
pub(crate) fn check_batch(batch: &[usize], l: usize) -> bool {
    !batch.is_empty() && batch.iter().all(|&i| i < l)
}
