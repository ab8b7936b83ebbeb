use nalgebra::{DMatrix, DVector};

use super::{check_batch, to_dvector, SpdMatrix};
use crate::error::{Error, Result};
use crate::target::TargetModel;

/// Bayesian linear regression with Huber errors and a Gaussian prior:
/// `p(β) ∝ N(β; μ, Σ) exp(-Σ_l ρ_c(y_l - ⟨v_l, β⟩))` where `ρ_c` is Huber's
/// loss with threshold `c`.
#[derive(Clone, Debug)]
pub struct HuberRegression {
    covariates: DMatrix<f64>,
    responses: Vec<f64>,
    prior_mean: DVector<f64>,
    prior_cov: SpdMatrix,
    threshold: f64,
}

fn huber_loss(r: f64, c: f64) -> f64 {
    if r.abs() <= c {
        0.5 * r * r
    } else {
        c * r.abs() - 0.5 * c * c
    }
}

impl HuberRegression {
    pub fn new(
        covariates: DMatrix<f64>,
        responses: Vec<f64>,
        prior_mean: Vec<f64>,
        prior_cov: DMatrix<f64>,
        threshold: f64,
    ) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "huber threshold must be > 0, got {threshold}"
            )));
        }
        let prior_cov = SpdMatrix::new(prior_cov, "prior covariance")?;
        let d = prior_cov.dim();
        if prior_mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: prior_mean.len(),
            });
        }
        if covariates.nrows() > 0 && covariates.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariates.ncols(),
            });
        }
        if responses.len() != covariates.nrows() {
            return Err(Error::DimensionMismatch {
                expected: covariates.nrows(),
                got: responses.len(),
            });
        }
        Ok(Self {
            covariates: if covariates.nrows() == 0 {
                DMatrix::zeros(0, d)
            } else {
                covariates
            },
            responses,
            prior_mean: to_dvector(&prior_mean),
            prior_cov,
            threshold,
        })
    }

    fn residual(&self, l: usize, beta: &DVector<f64>) -> f64 {
        self.responses[l] - self.covariates.row(l).dot(&beta.transpose())
    }

    fn add_term(&self, l: usize, beta: &DVector<f64>, scale: f64, out: &mut DVector<f64>) {
        let c = self.threshold;
        let coef = scale * self.residual(l, beta).clamp(-c, c);
        for (o, vk) in out.iter_mut().zip(self.covariates.row(l).iter()) {
            *o += coef * vk;
        }
    }

    fn prior_score(&self, beta: &DVector<f64>) -> DVector<f64> {
        -(&self.prior_cov.inverse * (beta - &self.prior_mean))
    }
}

impl TargetModel for HuberRegression {
    fn dim(&self) -> usize {
        self.prior_cov.dim()
    }

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let beta = to_dvector(x);
        let mut s = self.prior_score(&beta);
        for l in 0..self.responses.len() {
            self.add_term(l, &beta, 1.0, &mut s);
        }
        s.as_slice().to_vec()
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let beta = to_dvector(x);
        let r = &beta - &self.prior_mean;
        let mut lp = -0.5 * r.dot(&(&self.prior_cov.inverse * &r));
        for l in 0..self.responses.len() {
            lp -= huber_loss(self.residual(l, &beta), self.threshold);
        }
        Some(lp)
    }

    fn has_log_density(&self) -> bool {
        true
    }

    fn num_data_terms(&self) -> Option<usize> {
        Some(self.responses.len())
    }

    fn minibatch_score(&self, x: &[f64], batch: &[usize]) -> Option<Vec<f64>> {
        if !check_batch(batch, self.responses.len()) {
            return None;
        }
        let beta = to_dvector(x);
        let mut s = self.prior_score(&beta);
        let scale = self.responses.len() as f64 / batch.len() as f64;
        for &l in batch {
            self.add_term(l, &beta, scale, &mut s);
        }
        Some(s.as_slice().to_vec())
    }
}
