//! The target distribution interface and finite-difference validation.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used by [`validate_target`].
pub const SCORE_FD_TOL: f64 = 1e-4;

/// A distribution `P` on `R^d` known through its score `∇ log p`.
///
/// `log_density` is only needed by samplers with an accept/reject step and by
/// validation; it may omit the normalizing constant.
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `∇ log p(x)`.
    fn score(&self, x: &[f64]) -> Vec<f64>;

    /// `log p(x)` up to an additive constant.
    fn log_density(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn has_log_density(&self) -> bool {
        false
    }

    /// One exact draw from `P`, when an exact sampler exists.
    fn sample_exact(&self, _rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        None
    }

    fn has_exact_sampler(&self) -> bool {
        false
    }

    /// Number of likelihood terms when the score splits as
    /// `base(x) + Σ_l term_l(x)`.
    fn num_data_terms(&self) -> Option<usize> {
        None
    }

    /// Unbiased minibatch score `base(x) + (L / |batch|) Σ_{l ∈ batch} term_l(x)`.
    fn minibatch_score(&self, _x: &[f64], _batch: &[usize]) -> Option<Vec<f64>> {
        None
    }
}

impl<T: TargetModel + ?Sized> TargetModel for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn score(&self, x: &[f64]) -> Vec<f64> {
        (**self).score(x)
    }
    fn log_density(&self, x: &[f64]) -> Option<f64> {
        (**self).log_density(x)
    }
    fn has_log_density(&self) -> bool {
        (**self).has_log_density()
    }
    fn sample_exact(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample_exact(rng)
    }
    fn has_exact_sampler(&self) -> bool {
        (**self).has_exact_sampler()
    }
    fn num_data_terms(&self) -> Option<usize> {
        (**self).num_data_terms()
    }
    fn minibatch_score(&self, x: &[f64], batch: &[usize]) -> Option<Vec<f64>> {
        (**self).minibatch_score(x, batch)
    }
}

/// A target given by a pair of closures. Handy for tests and ad hoc models.
pub struct FnTarget<S, L> {
    dim: usize,
    score: S,
    log_density: Option<L>,
}

impl<S> FnTarget<S, fn(&[f64]) -> f64>
where
    S: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn score_only(dim: usize, score: S) -> Self {
        Self {
            dim,
            score,
            log_density: None,
        }
    }
}

impl<S, L> FnTarget<S, L>
where
    S: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    L: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, score: S, log_density: L) -> Self {
        Self {
            dim,
            score,
            log_density: Some(log_density),
        }
    }
}

impl<S, L> TargetModel for FnTarget<S, L>
where
    S: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    L: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn score(&self, x: &[f64]) -> Vec<f64> {
        (self.score)(x)
    }
    fn log_density(&self, x: &[f64]) -> Option<f64> {
        self.log_density.as_ref().map(|f| f(x))
    }
    fn has_log_density(&self) -> bool {
        self.log_density.is_some()
    }
}

/// Central finite-difference gradient with per-coordinate step
/// `h * (1 + |x_k|)`.
pub fn central_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let step = h * (1.0 + x[k].abs());
            probe[k] = x[k] + step;
            let up = f(&probe);
            probe[k] = x[k] - step;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest componentwise deviation `|a_k - b_k| / max(1, |b_k|)`.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetReport {
    pub probes: usize,
    /// `None` when the target has no log density to difference.
    pub max_deviation: Option<f64>,
    pub passed: bool,
}

/// Compares the score against central differences of the log density at
/// each probe.
pub fn validate_target(target: &dyn TargetModel, probes: &[Vec<f64>]) -> Result<TargetReport> {
    let dim = target.dim();
    let mut worst: Option<f64> = None;
    for x in probes {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        let s = target.score(x);
        if s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.len(),
            });
        }
        if target.has_log_density() {
            let fd = central_difference_gradient(
                |y| target.log_density(y).unwrap_or(f64::NAN),
                x,
                1e-5,
            );
            let dev = max_relative_deviation(&fd, &s);
            let dev = if dev.is_nan() { f64::INFINITY } else { dev };
            worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
        }
    }
    Ok(TargetReport {
        probes: probes.len(),
        max_deviation: worst,
        passed: worst.map_or(true, |w| w <= SCORE_FD_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_pair_passes() {
        let t = FnTarget::new(1, |x: &[f64]| vec![-x[0]], |x: &[f64]| -0.5 * x[0] * x[0]);
        let r = validate_target(&t, &[vec![0.0], vec![1.0], vec![-2.0]]).unwrap();
        assert!(r.passed);
        assert!(r.max_deviation.unwrap() < 1e-8);
    }

    #[test]
    fn mismatched_pair_fails() {
        let t = FnTarget::new(1, |x: &[f64]| vec![-x[0]], |x: &[f64]| -x[0].powi(4));
        let r = validate_target(&t, &[vec![0.0], vec![1.0], vec![-2.0]]).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn probe_dimension_checked() {
        let t = FnTarget::score_only(2, |x: &[f64]| x.iter().map(|v| -v).collect());
        assert!(matches!(
            validate_target(&t, &[vec![0.0]]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let r = validate_target(&t, &[vec![0.0, 1.0]]).unwrap();
        assert!(r.passed && r.max_deviation.is_none());
    }
}
