use nalgebra::{DMatrix, DVector};

use super::{check_batch, softplus, to_dvector, SpdMatrix};
use crate::error::{Error, Result};
use crate::target::TargetModel;

/// Bayesian logistic regression posterior with a Gaussian prior:
/// `p(β) ∝ N(β; μ, Σ) Π_l 1 / (1 + exp(-y_l ⟨v_l, β⟩))`.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    covariates: DMatrix<f64>,
    labels: Vec<f64>,
    prior_mean: DVector<f64>,
    prior_cov: SpdMatrix,
}

impl LogisticRegression {
    /// `covariates` is `L × d`; labels must be `±1`.
    pub fn new(
        covariates: DMatrix<f64>,
        labels: Vec<f64>,
        prior_mean: Vec<f64>,
        prior_cov: DMatrix<f64>,
    ) -> Result<Self> {
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
        if labels.len() != covariates.nrows() {
            return Err(Error::DimensionMismatch {
                expected: covariates.nrows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter("labels must be -1 or +1".into()));
        }
        Ok(Self {
            covariates: if covariates.nrows() == 0 {
                DMatrix::zeros(0, d)
            } else {
                covariates
            },
            labels,
            prior_mean: to_dvector(&prior_mean),
            prior_cov,
        })
    }

    fn prior_score(&self, beta: &DVector<f64>) -> DVector<f64> {
        -(&self.prior_cov.inverse * (beta - &self.prior_mean))
    }

    /// `y_l v_l / (1 + exp(y_l ⟨v_l, β⟩))`, accumulated into `out` with factor `scale`.
    fn add_term(&self, l: usize, beta: &DVector<f64>, scale: f64, out: &mut DVector<f64>) {
        let v = self.covariates.row(l);
        let y = self.labels[l];
        let z = y * v.dot(&beta.transpose());
        let coef = scale * y / (1.0 + z.exp());
        for (o, vk) in out.iter_mut().zip(v.iter()) {
            *o += coef * vk;
        }
    }
}

impl TargetModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.prior_cov.dim()
    }

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let beta = to_dvector(x);
        let mut s = self.prior_score(&beta);
        for l in 0..self.labels.len() {
            self.add_term(l, &beta, 1.0, &mut s);
        }
        s.as_slice().to_vec()
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let beta = to_dvector(x);
        let r = &beta - &self.prior_mean;
        let mut lp = -0.5 * r.dot(&(&self.prior_cov.inverse * &r));
        for (l, y) in self.labels.iter().enumerate() {
            let z = y * self.covariates.row(l).dot(&beta.transpose());
            lp -= softplus(-z);
        }
        Some(lp)
    }

    fn has_log_density(&self) -> bool {
        true
    }

    fn num_data_terms(&self) -> Option<usize> {
        Some(self.labels.len())
    }

    fn minibatch_score(&self, x: &[f64], batch: &[usize]) -> Option<Vec<f64>> {
        if !check_batch(batch, self.labels.len()) {
            return None;
        }
        let beta = to_dvector(x);
        let mut s = self.prior_score(&beta);
        let scale = self.labels.len() as f64 / batch.len() as f64;
        for &l in batch {
            self.add_term(l, &beta, scale, &mut s);
        }
        Some(s.as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_only() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let t = LogisticRegression::new(DMatrix::zeros(0, 2), vec![], vec![0.0, 0.0], cov).unwrap();
        let s = t.score(&[1.0, 2.0]);
        assert!((s[0] + 0.5).abs() < 1e-15 && (s[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_datum_at_origin_is_half_yv() {
        let v = DMatrix::from_row_slice(1, 2, &[3.0, -1.0]);
        let t = LogisticRegression::new(v, vec![-1.0], vec![0.0, 0.0], DMatrix::identity(2, 2))
            .unwrap();
        assert_eq!(t.score(&[0.0, 0.0]), vec![-1.5, 0.5]);
    }

    #[test]
    fn extreme_margins_stay_finite() {
        let v = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let t = LogisticRegression::new(v, vec![1.0, 1.0], vec![0.0], DMatrix::identity(1, 1))
            .unwrap();
        for b in [1e8, -1e8] {
            assert!(t.score(&[b])[0].is_finite());
            assert!(t.log_density(&[b]).unwrap().is_finite());
        }
    }

    #[test]
    fn rejects_bad_labels() {
        let v = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(LogisticRegression::new(v, vec![0.0], vec![0.0], DMatrix::identity(1, 1)).is_err());
    }
}
