use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex};

use super::{to_dvector, SpdMatrix};
use crate::error::{Error, Result};
use crate::sample::WeightedSample;
use crate::target::TargetModel;

/// `p(x) = Σ_j w_j N(x; μ_j, Σ)` with a covariance shared by all components.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    cov: SpdMatrix,
    picker: WeightedIndex<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, cov: DMatrix<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} means",
                weights.len(),
                means.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be >= 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {sum}"
            )));
        }
        let cov = SpdMatrix::new(cov, "mixture covariance")?;
        let d = cov.dim();
        if let Some(m) = means.iter().find(|m| m.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.len(),
            });
        }
        let picker = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidParameter(format!("mixture weights: {e}")))?;
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights,
            means: means.iter().map(|m| to_dvector(m)).collect(),
            cov,
            picker,
        })
    }

    /// `N(mean, cov)`.
    pub fn gaussian(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], cov)
    }

    /// `N(0, I_d)`.
    pub fn standard_normal(d: usize) -> Self {
        Self::gaussian(vec![0.0; d], DMatrix::identity(d, d)).expect("identity is SPD")
    }

    /// Equal-weight 1-D mixture of `N(-Δ/2, 1)` and `N(Δ/2, 1)`.
    pub fn symmetric_pair(delta: f64) -> Self {
        Self::new(
            vec![0.5, 0.5],
            vec![vec![-delta / 2.0], vec![delta / 2.0]],
            DMatrix::identity(1, 1),
        )
        .expect("valid mixture")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> impl Iterator<Item = &[f64]> {
        self.means.iter().map(|m| m.as_slice())
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov.matrix
    }

    /// `Σ_j w_j μ_j`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = DVector::zeros(self.cov.dim());
        for (w, mu) in self.weights.iter().zip(&self.means) {
            m += mu * *w;
        }
        m.as_slice().to_vec()
    }

    /// Per-component log joint `log w_j - ½ (x-μ_j)ᵀ Σ⁻¹ (x-μ_j)`.
    fn component_logits(&self, x: &DVector<f64>) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.log_weights)
            .map(|(mu, lw)| {
                let r = x - mu;
                lw - 0.5 * r.dot(&(&self.cov.inverse * &r))
            })
            .collect()
    }

    /// Posterior component probabilities `π_j(x)`.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.component_logits(&to_dvector(x)))
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(v);
    v.iter().map(|t| (t - lse).exp()).collect()
}

impl TargetModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.cov.dim()
    }

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let xv = to_dvector(x);
        let pis = softmax(&self.component_logits(&xv));
        let mut mu = DVector::zeros(xv.len());
        for (p, m) in pis.iter().zip(&self.means) {
            mu += m * *p;
        }
        (&self.cov.inverse * (mu - xv)).as_slice().to_vec()
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let d = self.cov.dim() as f64;
        let norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + self.cov.log_det);
        Some(norm + log_sum_exp(&self.component_logits(&to_dvector(x))))
    }

    fn has_log_density(&self) -> bool {
        true
    }

    fn sample_exact(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let j = self.picker.sample(rng);
        let z = DVector::from_iterator(
            self.cov.dim(),
            (0..self.cov.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        Some((&self.means[j] + &self.cov.chol_lower * z).as_slice().to_vec())
    }

    fn has_exact_sampler(&self) -> bool {
        true
    }
}

/// `n` i.i.d. draws from the mixture with uniform weights.
pub fn gmm_sample(params: &GaussianMixture, n: usize, seed: u64) -> Result<WeightedSample> {
    draw_exact(params, n, seed)
}

pub(crate) fn draw_exact(target: &dyn TargetModel, n: usize, seed: u64) -> Result<WeightedSample> {
    if !target.has_exact_sampler() {
        return Err(Error::NoExactSampler);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = target.dim();
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        flat.extend(target.sample_exact(&mut rng).ok_or(Error::NoExactSampler)?);
    }
    WeightedSample::from_flat(n, d, flat, vec![1.0 / n as f64; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::central_difference_gradient;

    #[test]
    fn symmetric_pair_score_vanishes_at_origin() {
        let p = GaussianMixture::symmetric_pair(4.0);
        assert_eq!(p.score(&[0.0]), vec![0.0]);
    }

    #[test]
    fn single_component_is_gaussian_score() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = GaussianMixture::gaussian(vec![1.0, -1.0], cov.clone()).unwrap();
        let x = [0.3, 0.7];
        let expect = cov.try_inverse().unwrap() * DVector::from_column_slice(&[0.7, -1.7]);
        for (a, b) in p.score(&x).iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_score_matches_fd_at_one() {
        let p = GaussianMixture::symmetric_pair(4.0);
        let fd = central_difference_gradient(|x| p.log_density(x).unwrap(), &[1.0], 1e-5);
        let s = p.score(&[1.0]);
        assert!((fd[0] - s[0]).abs() <= 1e-5 * s[0].abs().max(1.0));
    }

    #[test]
    fn far_separated_modes_do_not_underflow() {
        let p = GaussianMixture::symmetric_pair(80.0);
        let s = p.score(&[0.5]);
        assert!(s[0].is_finite());
        assert!(p.log_density(&[0.0]).unwrap().is_finite());
    }

    #[test]
    fn zero_weight_component_never_drawn() {
        let p = GaussianMixture::new(
            vec![1.0, 0.0],
            vec![vec![-100.0], vec![100.0]],
            DMatrix::identity(1, 1),
        )
        .unwrap();
        let s = gmm_sample(&p, 500, 3).unwrap();
        assert!(s.flat_points().iter().all(|x| *x < 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = GaussianMixture::standard_normal(2);
        assert_eq!(gmm_sample(&p, 1, 11).unwrap(), gmm_sample(&p, 1, 11).unwrap());
        assert_ne!(gmm_sample(&p, 1, 11).unwrap(), gmm_sample(&p, 1, 12).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GaussianMixture::new(vec![0.6, 0.6], vec![vec![0.0], vec![1.0]], DMatrix::identity(1, 1)).is_err());
        assert!(GaussianMixture::gaussian(vec![0.0], DMatrix::from_element(1, 1, -1.0)).is_err());
        assert!(GaussianMixture::gaussian(vec![0.0, 0.0], DMatrix::identity(1, 1)).is_err());
    }
}
