//! Itô diffusion coefficients: covariance `a(x)`, stream `c(x)` and the
//! row divergence of `m(x) = a(x) + c(x)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Coefficients {
    Constant {
        a: DMatrix<f64>,
        c: DMatrix<f64>,
    },
    Variable {
        a: MatrixFn,
        c: MatrixFn,
        div_m: Option<VectorFn>,
    },
}

/// Coefficients of a `P`-targeted Itô diffusion.
#[derive(Clone)]
pub struct DiffusionSpec {
    dim: usize,
    coefficients: Coefficients,
    fd_divergence: bool,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("dim", &self.dim)
            .field("constant", &self.is_constant())
            .field("fd_divergence", &self.fd_divergence)
            .finish()
    }
}

impl DiffusionSpec {
    /// Overdamped Langevin: `a = I`, `c = 0`.
    pub fn langevin(dim: usize) -> Self {
        Self {
            dim,
            coefficients: Coefficients::Constant {
                a: DMatrix::identity(dim, dim),
                c: DMatrix::zeros(dim, dim),
            },
            fd_divergence: false,
        }
    }

    /// Preconditioned Langevin with constant covariance `a`.
    pub fn preconditioned(a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        Self::nonreversible(a, DMatrix::zeros(dim, dim))
    }

    /// Constant `a` (symmetric PSD) and constant `c` (skew-symmetric).
    pub fn nonreversible(a: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || c.shape() != a.shape() {
            return Err(Error::InvalidDiffusion(format!(
                "a is {:?} and c is {:?}; both must be the same square shape",
                a.shape(),
                c.shape()
            )));
        }
        check_covariance(&a)?;
        check_stream(&c)?;
        Ok(Self {
            dim: a.nrows(),
            coefficients: Coefficients::Constant { a, c },
            fd_divergence: false,
        })
    }

    /// Second-order (underdamped) Langevin on `R^{2d}` for the joint target
    /// `P ⊗ N(0, I)`: `a = 2 diag(0, I)`, `c = 2 [[0, -I], [I, 0]]`.
    pub fn second_order(base_dim: usize) -> Self {
        let d = base_dim;
        let mut a = DMatrix::zeros(2 * d, 2 * d);
        let mut c = DMatrix::zeros(2 * d, 2 * d);
        for k in 0..d {
            a[(d + k, d + k)] = 2.0;
            c[(k, d + k)] = -2.0;
            c[(d + k, k)] = 2.0;
        }
        Self {
            dim: 2 * d,
            coefficients: Coefficients::Constant { a, c },
            fd_divergence: false,
        }
    }

    /// Position-dependent coefficients. `div_m` returns the row divergence
    /// `(⟨∇, m(x)⟩)_j = Σ_k ∂_k m_{jk}(x)`.
    pub fn variable(dim: usize, a: MatrixFn, c: MatrixFn, div_m: Option<VectorFn>) -> Self {
        Self {
            dim,
            coefficients: Coefficients::Variable { a, c, div_m },
            fd_divergence: false,
        }
    }

    /// Allows a central finite-difference divergence when no analytic one
    /// was supplied.
    pub fn with_fd_divergence(mut self, enabled: bool) -> Self {
        self.fd_divergence = enabled;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.coefficients, Coefficients::Constant { .. })
    }

    pub fn a(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.coefficients {
            Coefficients::Constant { a, .. } => a.clone(),
            Coefficients::Variable { a, .. } => a(x),
        }
    }

    pub fn c(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.coefficients {
            Coefficients::Constant { c, .. } => c.clone(),
            Coefficients::Variable { c, .. } => c(x),
        }
    }

    /// `m(x) = a(x) + c(x)`.
    pub fn m(&self, x: &[f64]) -> DMatrix<f64> {
        self.a(x) + self.c(x)
    }

    /// `m` when the coefficients are constant.
    pub fn constant_m(&self) -> Option<DMatrix<f64>> {
        match &self.coefficients {
            Coefficients::Constant { a, c } => Some(a + c),
            Coefficients::Variable { .. } => None,
        }
    }

    pub fn has_analytic_divergence(&self) -> bool {
        match &self.coefficients {
            Coefficients::Constant { .. } => true,
            Coefficients::Variable { div_m, .. } => div_m.is_some(),
        }
    }

    /// Row divergence of `m` at `x`. Zero for constant coefficients; finite
    /// differences only when enabled through [`Self::with_fd_divergence`].
    pub fn div_m(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.coefficients {
            Coefficients::Constant { .. } => Ok(vec![0.0; self.dim]),
            Coefficients::Variable { div_m: Some(f), .. } => Ok(f(x)),
            Coefficients::Variable { div_m: None, .. } if self.fd_divergence => {
                Ok(self.fd_div_m(x))
            }
            Coefficients::Variable { div_m: None, .. } => Err(Error::MissingDivergence),
        }
    }

    /// Central-difference row divergence of `m` with step
    /// `1e-5 * (1 + ‖x‖_∞)`.
    pub fn fd_div_m(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-5 * (1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        let mut probe = x.to_vec();
        let mut div = vec![0.0; self.dim];
        for k in 0..self.dim {
            probe[k] = x[k] + h;
            let up = self.m(&probe);
            probe[k] = x[k] - h;
            let down = self.m(&probe);
            probe[k] = x[k];
            for (j, dj) in div.iter_mut().enumerate() {
                *dj += (up[(j, k)] - down[(j, k)]) / (2.0 * h);
            }
        }
        div
    }

    /// Checks `a` symmetric PSD and `c` skew-symmetric at each probe.
    pub fn check_at(&self, probes: &[&[f64]]) -> Result<()> {
        match &self.coefficients {
            Coefficients::Constant { a, c } => {
                check_covariance(a)?;
                check_stream(c)
            }
            Coefficients::Variable { .. } => {
                for x in probes {
                    if x.len() != self.dim {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            got: x.len(),
                        });
                    }
                    let a = self.a(x);
                    let c = self.c(x);
                    if a.shape() != (self.dim, self.dim) || c.shape() != (self.dim, self.dim) {
                        return Err(Error::InvalidDiffusion(format!(
                            "coefficient shape {:?} / {:?} at {x:?}",
                            a.shape(),
                            c.shape()
                        )));
                    }
                    check_covariance(&a)?;
                    check_stream(&c)?;
                }
                Ok(())
            }
        }
    }
}

fn check_covariance(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDiffusion("non-finite covariance entry".into()));
    }
    let asym = (a - a.transpose()).abs().max();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidDiffusion(format!(
            "covariance not symmetric (max |a - a^T| = {asym:e})"
        )));
    }
    let min_eig = a.clone().symmetric_eigenvalues().min();
    if min_eig < -PSD_TOL {
        return Err(Error::InvalidDiffusion(format!(
            "covariance not PSD (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

fn check_stream(c: &DMatrix<f64>) -> Result<()> {
    let sym = (c + c.transpose()).abs().max();
    if !(sym <= SYMMETRY_TOL) {
        return Err(Error::InvalidDiffusion(format!(
            "stream coefficient not skew-symmetric (max |c + c^T| = {sym:e})"
        )));
    }
    Ok(())
}
