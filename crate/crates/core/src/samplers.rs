//! Sample generators: i.i.d. draws, MALA and SGRLD.
//!
//! Chains keep every `thin`-th state after the burn-in. Repeated states
//! (rejections, or a chain that does not move) are merged into one support
//! point carrying their combined weight, so the returned
//! [`WeightedSample`] is the empirical measure of the kept states.

use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sample::WeightedSample;
use crate::target::TargetModel;
use crate::targets::GaussianMixture;

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub step_size: f64,
    pub n_steps: usize,
    pub thin: usize,
    /// Fraction of the steps discarded before thinning.
    pub burn_in: f64,
    /// SGRLD only. `None` uses every data term.
    pub minibatch: Option<usize>,
    pub seed: u64,
    pub init: Vec<f64>,
    /// Multiplies the injected Gaussian noise. Test hook: `0.0` makes a chain
    /// deterministic gradient ascent.
    pub noise_scale: f64,
}

impl ChainConfig {
    pub fn new(step_size: f64, n_steps: usize, init: Vec<f64>) -> Self {
        Self {
            step_size,
            n_steps,
            thin: 1,
            burn_in: 0.1,
            minibatch: None,
            seed: 0,
            init,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be > 0, got {}",
                self.step_size
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thinning interval must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidParameter(format!(
                "burn-in fraction must be in [0, 1), got {}",
                self.burn_in
            )));
        }
        if self.init.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.init.len(),
            });
        }
        if self.init.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidParameter("noise scale must be >= 0".into()));
        }
        if self.kept_steps().next().is_none() {
            return Err(Error::InvalidParameter("configuration keeps no states".into()));
        }
        Ok(())
    }

    /// Step indices (1-based) whose states are kept.
    fn kept_steps(&self) -> impl Iterator<Item = usize> {
        let burn = (self.burn_in * self.n_steps as f64).floor() as usize;
        let thin = self.thin.max(1);
        (burn + 1..=self.n_steps).filter(move |s| (s - burn) % thin == 0)
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub sample: WeightedSample,
    /// Kept states in order, repeats included.
    pub states: Vec<Vec<f64>>,
    /// Fraction of accepted proposals (MALA only).
    pub acceptance_rate: Option<f64>,
}

/// Chain settings worth recording next to an output file.
#[derive(Clone, Debug, Serialize)]
pub struct ChainMetadata {
    pub sampler: String,
    pub step_size: f64,
    pub n_steps: usize,
    pub thin: usize,
    pub burn_in: f64,
    pub minibatch: Option<usize>,
    pub seed: u64,
    pub acceptance_rate: Option<f64>,
    pub kept_states: usize,
    pub support_points: usize,
}

impl ChainMetadata {
    pub fn new(sampler: &str, cfg: &ChainConfig, out: &ChainOutput) -> Self {
        Self {
            sampler: sampler.to_string(),
            step_size: cfg.step_size,
            n_steps: cfg.n_steps,
            thin: cfg.thin,
            burn_in: cfg.burn_in,
            minibatch: cfg.minibatch,
            seed: cfg.seed,
            acceptance_rate: out.acceptance_rate,
            kept_states: out.states.len(),
            support_points: out.sample.len(),
        }
    }
}

/// Empirical measure of `states`, merging bitwise-equal states.
pub fn empirical_measure(states: &[Vec<f64>]) -> Result<WeightedSample> {
    if states.is_empty() {
        return Err(Error::InvalidSample("no states".into()));
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for s in states {
        let key: Vec<u64> = s.iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => counts[i] += 1,
            None => {
                index.insert(key, rows.len());
                rows.push(s.clone());
                counts.push(1);
            }
        }
    }
    let total = states.len() as f64;
    let weights = counts.iter().map(|&c| c as f64 / total).collect();
    WeightedSample::new(rows, weights)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn check_finite(state: &[f64]) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("chain diverged at state {state:?}")))
    }
}

/// `log α(from → to)` for MALA with step `ε`:
/// `log p(to) - log p(from) + log q(from | to) - log q(to | from)`.
pub fn mala_log_accept_ratio(target: &dyn TargetModel, from: &[f64], to: &[f64], eps: f64) -> Result<f64> {
    if from == to {
        return Ok(0.0);
    }
    let lp_from = target.log_density(from).ok_or(Error::MissingLogDensity)?;
    let lp_to = target.log_density(to).ok_or(Error::MissingLogDensity)?;
    let log_q = |y: &[f64], x: &[f64]| {
        let s = target.score(x);
        -y.iter()
            .zip(x)
            .zip(&s)
            .map(|((yi, xi), si)| (yi - xi - 0.5 * eps * si).powi(2))
            .sum::<f64>()
            / (2.0 * eps)
    };
    Ok(lp_to - lp_from + log_q(from, to) - log_q(to, from))
}

/// Metropolis-adjusted Langevin chain.
pub fn mala_chain(target: &dyn TargetModel, cfg: &ChainConfig) -> Result<ChainOutput> {
    let d = target.dim();
    cfg.validate(d)?;
    if !target.has_log_density() {
        return Err(Error::MissingLogDensity);
    }
    let eps = cfg.step_size;
    let noise = cfg.noise_scale * eps.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Uniform::new(0.0_f64, 1.0);
    let mut keep = cfg.kept_steps().peekable();
    let mut state = cfg.init.clone();
    let mut states = Vec::new();
    let mut accepted = 0usize;
    for step in 1..=cfg.n_steps {
        let s = target.score(&state);
        let xi = gaussian_vec(&mut rng, d);
        let proposal: Vec<f64> = (0..d)
            .map(|k| state[k] + 0.5 * eps * s[k] + noise * xi[k])
            .collect();
        let u: f64 = unit.sample(&mut rng);
        let log_alpha = mala_log_accept_ratio(target, &state, &proposal, eps)?;
        if proposal.iter().all(|v| v.is_finite()) && u.ln() < log_alpha {
            state = proposal;
            accepted += 1;
        }
        if keep.peek() == Some(&step) {
            keep.next();
            states.push(state.clone());
        }
    }
    Ok(ChainOutput {
        sample: empirical_measure(&states)?,
        states,
        acceptance_rate: Some(accepted as f64 / cfg.n_steps.max(1) as f64),
    })
}

/// A metric `G(β) = λ(β) I`.
pub trait ScalarMetric: Send + Sync {
    fn lambda(&self, x: &[f64]) -> f64;
    /// `∇λ(β)`.
    fn grad_lambda(&self, x: &[f64]) -> Vec<f64>;

    /// `Γ(β) = Σ_j ∂_j [G⁻¹(β)]_{ij} = -λ(β)⁻² ∇λ(β)`.
    fn correction(&self, x: &[f64]) -> Vec<f64> {
        let l = self.lambda(x);
        self.grad_lambda(x).iter().map(|g| -g / (l * l)).collect()
    }
}

/// `G = I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMetric;

impl ScalarMetric for IdentityMetric {
    fn lambda(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn grad_lambda(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn correction(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// `G(β) = I / (2√(1 + ‖β/δ‖²))`.
#[derive(Clone, Copy, Debug)]
pub struct PseudoHuberMetric {
    pub delta: f64,
}

impl PseudoHuberMetric {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        Ok(Self { delta })
    }

    fn root(&self, x: &[f64]) -> f64 {
        (1.0 + x.iter().map(|v| v * v).sum::<f64>() / (self.delta * self.delta)).sqrt()
    }
}

impl ScalarMetric for PseudoHuberMetric {
    fn lambda(&self, x: &[f64]) -> f64 {
        0.5 / self.root(x)
    }

    fn grad_lambda(&self, x: &[f64]) -> Vec<f64> {
        let r = self.root(x);
        let c = -0.5 / (r * r * r * self.delta * self.delta);
        x.iter().map(|v| c * v).collect()
    }

    /// `∇(1/λ) = 2β / (δ² √(1 + ‖β/δ‖²))`.
    fn correction(&self, x: &[f64]) -> Vec<f64> {
        let c = 2.0 / (self.delta * self.delta * self.root(x));
        x.iter().map(|v| c * v).collect()
    }
}

/// Stochastic gradient Riemannian Langevin dynamics, unadjusted:
/// `β' = β + (ε/2)(G⁻¹ ĝ + Γ) + N(0, ε G⁻¹)` with `ĝ` the minibatch score.
pub fn sgrld_chain(target: &dyn TargetModel, metric: &dyn ScalarMetric, cfg: &ChainConfig) -> Result<ChainOutput> {
    let d = target.dim();
    cfg.validate(d)?;
    let terms = target.num_data_terms();
    let batch_size = match (cfg.minibatch, terms) {
        (None, _) => None,
        (Some(b), Some(l)) if b >= 1 && b <= l => Some((b, l)),
        (Some(b), Some(l)) => {
            return Err(Error::InvalidParameter(format!(
                "minibatch size {b} outside [1, {l}]"
            )))
        }
        (Some(_), None) => {
            return Err(Error::InvalidParameter(
                "target has no per-datum score terms for minibatching".into(),
            ))
        }
    };
    let eps = cfg.step_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut keep = cfg.kept_steps().peekable();
    let mut state = cfg.init.clone();
    let mut states = Vec::new();
    let mut batch = Vec::new();
    for step in 1..=cfg.n_steps {
        let lambda = metric.lambda(&state);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonSpdMetric { state });
        }
        let grad = match batch_size {
            None => target.score(&state),
            Some((b, l)) => {
                batch.clear();
                batch.extend(index::sample(&mut rng, l, b).iter());
                batch.sort_unstable();
                target
                    .minibatch_score(&state, &batch)
                    .ok_or_else(|| Error::InvalidParameter("minibatch score unavailable".into()))?
            }
        };
        let gamma = metric.correction(&state);
        let xi = gaussian_vec(&mut rng, d);
        let inv = 1.0 / lambda;
        let sd = cfg.noise_scale * (eps * inv).sqrt();
        for k in 0..d {
            state[k] += 0.5 * eps * (inv * grad[k] + gamma[k]) + sd * xi[k];
        }
        check_finite(&state)?;
        if keep.peek() == Some(&step) {
            keep.next();
            states.push(state.clone());
        }
    }
    Ok(ChainOutput {
        sample: empirical_measure(&states)?,
        states,
        acceptance_rate: None,
    })
}

/// `n` i.i.d. draws from a Gaussian mixture.
pub fn iid_chain(params: &GaussianMixture, n: usize, seed: u64) -> Result<WeightedSample> {
    crate::targets::gmm_sample(params, n, seed)
}
