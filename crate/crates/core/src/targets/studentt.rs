use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{check_batch, to_dvector, SpdMatrix};
use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::target::TargetModel;

/// Multivariate Student's t regression posterior under a pseudo-Huber prior:
///
/// `p(β) ∝ exp(δ²(1 - √(1 + ‖β/δ‖²))) · ξ(β)^{-(ν+L)/2}`,
/// `ξ(β) = 1 + (y - Vβ)ᵀ Σ⁻¹ (y - Vβ) / ν`.
///
/// The score is the exact gradient of this density, whose likelihood factor
/// is `(ν + L)/ν`.
#[derive(Clone, Debug)]
pub struct StudentTRegression {
    design: DMatrix<f64>,
    response: DVector<f64>,
    dof: f64,
    noise_cov: SpdMatrix,
    delta: f64,
}

/// Likelihood quantities shared by all data terms at one `β`.
struct Residuals {
    /// `Σ⁻¹ (y - Vβ)`
    weighted: DVector<f64>,
    /// `(ν + L) / (ν ξ(β))`
    factor: f64,
    xi: f64,
}

impl StudentTRegression {
    pub fn new(
        design: DMatrix<f64>,
        response: Vec<f64>,
        dof: f64,
        noise_cov: DMatrix<f64>,
        delta: f64,
    ) -> Result<Self> {
        if !(dof > 0.0) {
            return Err(Error::InvalidParameter(format!("dof must be > 0, got {dof}")));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        if design.ncols() == 0 {
            return Err(Error::InvalidParameter("design needs at least one column".into()));
        }
        if response.len() != design.nrows() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                got: response.len(),
            });
        }
        let noise_cov = SpdMatrix::new(noise_cov, "noise covariance")?;
        if noise_cov.dim() != design.nrows() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                got: noise_cov.dim(),
            });
        }
        Ok(Self {
            design,
            response: DVector::from_vec(response),
            dof,
            noise_cov,
            delta,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn num_obs(&self) -> usize {
        self.response.len()
    }

    fn residuals(&self, beta: &DVector<f64>) -> Residuals {
        let r = &self.response - &self.design * beta;
        let weighted = &self.noise_cov.inverse * &r;
        let xi = 1.0 + r.dot(&weighted) / self.dof;
        let l = self.num_obs() as f64;
        Residuals {
            weighted,
            factor: (self.dof + l) / (self.dof * xi),
            xi,
        }
    }

    /// `-β / √(1 + ‖β‖²/δ²)`, i.e. `-2β/ψ₀(‖β‖)`.
    fn prior_score(&self, beta: &DVector<f64>) -> DVector<f64> {
        let s = (1.0 + beta.norm_squared() / (self.delta * self.delta)).sqrt();
        -beta / s
    }
}

impl TargetModel for StudentTRegression {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn score(&self, x: &[f64]) -> Vec<f64> {
        let beta = to_dvector(x);
        let res = self.residuals(&beta);
        let lik = self.design.transpose() * &res.weighted * res.factor;
        (self.prior_score(&beta) + lik).as_slice().to_vec()
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let beta = to_dvector(x);
        let d2 = self.delta * self.delta;
        let prior = d2 * (1.0 - (1.0 + beta.norm_squared() / d2).sqrt());
        let res = self.residuals(&beta);
        let l = self.num_obs() as f64;
        Some(prior - 0.5 * (self.dof + l) * res.xi.ln())
    }

    fn has_log_density(&self) -> bool {
        true
    }

    fn num_data_terms(&self) -> Option<usize> {
        Some(self.num_obs())
    }

    /// Terms are `(ν+L)/(ν ξ(β)) · v_l (Σ⁻¹(y - Vβ))_l`; `ξ` and `Σ⁻¹ r`
    /// use all observations so that the terms sum exactly to the score.
    fn minibatch_score(&self, x: &[f64], batch: &[usize]) -> Option<Vec<f64>> {
        if !check_batch(batch, self.num_obs()) {
            return None;
        }
        let beta = to_dvector(x);
        let res = self.residuals(&beta);
        let mut s = self.prior_score(&beta);
        let scale = self.num_obs() as f64 / batch.len() as f64;
        for &l in batch {
            let coef = scale * res.factor * res.weighted[l];
            for (o, v) in s.iter_mut().zip(self.design.row(l).iter()) {
                *o += coef * v;
            }
        }
        Some(s.as_slice().to_vec())
    }
}

/// Riemannian Langevin coefficients for the pseudo-Huber geometry:
/// `a(β) = ½ψ₀(‖β‖) I = √(1 + ‖β‖²/δ²) I`, `c = 0`, with analytic
/// divergence `β / (δ² √(1 + ‖β‖²/δ²))`.
pub fn riemannian_spec_pseudo_huber(dim: usize, delta: f64) -> Result<DiffusionSpec> {
    riemannian_spec_pseudo_huber_scaled(dim, delta, 1.0)
}

/// As [`riemannian_spec_pseudo_huber`] with `a` multiplied by `scale`.
/// `scale = 2` gives `a(β) = G⁻¹(β)` for the SGRLD metric
/// `G(β) = I / (2√(1 + ‖β/δ‖²))`.
pub fn riemannian_spec_pseudo_huber_scaled(
    dim: usize,
    delta: f64,
    scale: f64,
) -> Result<DiffusionSpec> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let d2 = delta * delta;
    let root = move |x: &[f64]| (1.0 + x.iter().map(|v| v * v).sum::<f64>() / d2).sqrt();
    Ok(DiffusionSpec::variable(
        dim,
        Arc::new(move |x: &[f64]| DMatrix::identity(dim, dim) * (scale * root(x))),
        Arc::new(move |_: &[f64]| DMatrix::zeros(dim, dim)),
        Some(Arc::new(move |x: &[f64]| {
            let denom = d2 * root(x);
            x.iter().map(|v| scale * v / denom).collect()
        })),
    ))
}
