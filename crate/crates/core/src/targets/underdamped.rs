use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::target::TargetModel;

/// The joint target `P ⊗ N(0, I)` on `R^{2d}` used by the second-order
/// Langevin diffusion. Coordinates are `(x, v)`.
#[derive(Clone, Debug)]
pub struct Underdamped<T> {
    base: T,
}

impl<T: TargetModel> Underdamped<T> {
    pub fn new(base: T) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &T {
        &self.base
    }
}

impl<T: TargetModel> TargetModel for Underdamped<T> {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let d = self.base.dim();
        let mut s = self.base.score(&x[..d]);
        s.extend(x[d..].iter().map(|v| -v));
        s
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let d = self.base.dim();
        let lp = self.base.log_density(&x[..d])?;
        Some(lp - 0.5 * x[d..].iter().map(|v| v * v).sum::<f64>())
    }

    fn has_log_density(&self) -> bool {
        self.base.has_log_density()
    }

    fn sample_exact(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let mut x = self.base.sample_exact(rng)?;
        for _ in 0..self.base.dim() {
            x.push(rng.sample::<f64, _>(StandardNormal));
        }
        Some(x)
    }

    fn has_exact_sampler(&self) -> bool {
        self.base.has_exact_sampler()
    }
}
