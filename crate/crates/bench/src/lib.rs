//! Fixtures shared by the benchmarks.

use steinbench_core::targets::{gmm_sample, GaussianMixture};
use steinbench_core::WeightedSample;

/// `n` i.i.d. draws from the symmetric mixture with mode separation 4.
pub fn mixture_sample(n: usize) -> (WeightedSample, GaussianMixture) {
    let p = GaussianMixture::symmetric_pair(4.0);
    (gmm_sample(&p, n, 0).expect("valid mixture"), p)
}

/// `n` draws from `N(0, I_d)` together with that target.
pub fn normal_sample(n: usize, d: usize) -> (WeightedSample, GaussianMixture) {
    let p = GaussianMixture::standard_normal(d);
    (gmm_sample(&p, n, 1).expect("valid normal"), p)
}
