//! The diffusion Stein operator `(T_P g)(x) = 2⟨b(x), g(x)⟩ + ⟨m(x), ∇g(x)⟩`
//! evaluated at a finite set of points.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::target::TargetModel;

/// Drift `b(x_i)` and `m(x_i) = a(x_i) + c(x_i)` at `n` points in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorData {
    n: usize,
    d: usize,
    /// `n × d`, row-major.
    b_vals: Vec<f64>,
    /// `n × d × d`; `m_vals[(i*d + j)*d + k] = m_{jk}(x_i)`.
    m_vals: Vec<f64>,
}

impl OperatorData {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `b(x_i)`.
    pub fn b(&self, i: usize) -> &[f64] {
        &self.b_vals[i * self.d..(i + 1) * self.d]
    }

    /// Row `j` of `m(x_i)`.
    pub fn m_row(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.d + j) * self.d;
        &self.m_vals[start..start + self.d]
    }

    /// `m(x_i)` as a row-major `d × d` slice.
    pub fn m(&self, i: usize) -> &[f64] {
        let dd = self.d * self.d;
        &self.m_vals[i * dd..(i + 1) * dd]
    }

    /// Builds operator data from precomputed drift and `m` values.
    pub fn from_parts(n: usize, d: usize, b_vals: Vec<f64>, m_vals: Vec<f64>) -> Result<Self> {
        if b_vals.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: b_vals.len(),
            });
        }
        if m_vals.len() != n * d * d {
            return Err(Error::DimensionMismatch {
                expected: n * d * d,
                got: m_vals.len(),
            });
        }
        if b_vals.iter().chain(&m_vals).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "operator coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            n,
            d,
            b_vals,
            m_vals,
        })
    }
}

fn check_points(points: &[f64], d: usize) -> Result<usize> {
    if d == 0 || points.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.len(),
        });
    }
    Ok(points.len() / d)
}

fn check_score(s: &[f64], d: usize) -> Result<()> {
    if s.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s.len(),
        });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite score value".into()));
    }
    Ok(())
}

/// `b(x) = ½ m ∇log p(x)` for constant `m = a + c`.
///
/// `points` is a row-major `n × d` buffer with `d = target.dim()`.
pub fn drift_constant(
    m: &DMatrix<f64>,
    target: &dyn TargetModel,
    points: &[f64],
) -> Result<OperatorData> {
    let d = target.dim();
    if m.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m.nrows(),
        });
    }
    let n = check_points(points, d)?;
    let m_row_major: Vec<f64> = m.transpose().as_slice().to_vec();
    let mut b_vals = Vec::with_capacity(n * d);
    let mut m_vals = Vec::with_capacity(n * d * d);
    for x in points.chunks_exact(d) {
        let s = target.score(x);
        check_score(&s, d)?;
        for row in m_row_major.chunks_exact(d) {
            let ms: f64 = row.iter().zip(&s).map(|(a, b)| a * b).sum();
            b_vals.push(0.5 * ms);
        }
        m_vals.extend_from_slice(&m_row_major);
    }
    OperatorData::from_parts(n, d, b_vals, m_vals)
}

/// `b(x) = ½ (m(x) ∇log p(x) + ⟨∇, m(x)⟩)` for a general spec.
pub fn drift_general(
    spec: &DiffusionSpec,
    target: &dyn TargetModel,
    points: &[f64],
) -> Result<OperatorData> {
    let d = target.dim();
    if spec.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.dim(),
        });
    }
    if let Some(m) = spec.constant_m() {
        return drift_constant(&m, target, points);
    }
    let n = check_points(points, d)?;
    let mut b_vals = Vec::with_capacity(n * d);
    let mut m_vals = Vec::with_capacity(n * d * d);
    for x in points.chunks_exact(d) {
        let s = target.score(x);
        check_score(&s, d)?;
        let m = spec.m(x);
        let div = spec.div_m(x)?;
        if div.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: div.len(),
            });
        }
        for j in 0..d {
            let ms: f64 = (0..d).map(|k| m[(j, k)] * s[k]).sum();
            b_vals.push(0.5 * (ms + div[j]));
            m_vals.extend((0..d).map(|k| m[(j, k)]));
        }
    }
    OperatorData::from_parts(n, d, b_vals, m_vals)
}

/// `(T_P g)(x_i) = 2⟨b(x_i), g(x_i)⟩ + Σ_{jk} m_{jk}(x_i) ∂_k g_j(x_i)`.
///
/// `g_vals` is `n × d` and `grad_g_vals` is `n × d × d` with
/// `grad_g_vals[(i*d + j)*d + k] = ∂_k g_j(x_i)`.
pub fn apply_operator(op: &OperatorData, g_vals: &[f64], grad_g_vals: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = (op.n, op.d);
    if g_vals.len() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            got: g_vals.len(),
        });
    }
    if grad_g_vals.len() != n * d * d {
        return Err(Error::DimensionMismatch {
            expected: n * d * d,
            got: grad_g_vals.len(),
        });
    }
    Ok((0..n)
        .map(|i| {
            let g = &g_vals[i * d..(i + 1) * d];
            let lin: f64 = op.b(i).iter().zip(g).map(|(b, g)| b * g).sum();
            let dd = d * d;
            let grad = &grad_g_vals[i * dd..(i + 1) * dd];
            let quad: f64 = op.m(i).iter().zip(grad).map(|(m, h)| m * h).sum();
            2.0 * lin + quad
        })
        .collect())
}

/// A smooth test function `g: R^d → R^d` with its Jacobian.
pub trait TestFunction: Sync {
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d × d` Jacobian, entry `(j, k)` is `∂_k g_j(x)`.
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;
}

/// Test function built from closures.
pub struct FnTestFunction<V, J> {
    pub value: V,
    pub jacobian: J,
}

impl<V, J> TestFunction for FnTestFunction<V, J>
where
    V: Fn(&[f64]) -> Vec<f64> + Sync,
    J: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        (self.jacobian)(x)
    }
}

/// The same scalar function applied to every coordinate:
/// `g_j(x) = f(x_j)`, so the Jacobian is diagonal.
pub struct Coordinatewise<F, D> {
    pub f: F,
    pub df: D,
}

impl<F, D> TestFunction for Coordinatewise<F, D>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    fn value(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| (self.f)(v)).collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut j = vec![0.0; d * d];
        for k in 0..d {
            j[k * d + k] = (self.df)(x[k]);
        }
        j
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanZeroReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n_mc: usize,
    /// `|estimate| ≤ 4 stderr`.
    pub passed: bool,
}

/// Monte Carlo estimate of `E_P[(T_P g)(Z)]` from exact draws of `P`.
pub fn mean_zero_check(
    target: &dyn TargetModel,
    spec: &DiffusionSpec,
    g: &dyn TestFunction,
    n_mc: usize,
    seed: u64,
) -> Result<MeanZeroReport> {
    if !target.has_exact_sampler() {
        return Err(Error::NoExactSampler);
    }
    if n_mc < 2 {
        return Err(Error::InvalidParameter("n_mc must be >= 2".into()));
    }
    let d = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_mc * d);
    let mut g_vals = Vec::with_capacity(n_mc * d);
    let mut grads = Vec::with_capacity(n_mc * d * d);
    for _ in 0..n_mc {
        let z = target.sample_exact(&mut rng).ok_or(Error::NoExactSampler)?;
        g_vals.extend(g.value(&z));
        grads.extend(g.jacobian(&z));
        points.extend(z);
    }
    let op = drift_general(spec, target, &points)?;
    let h = apply_operator(&op, &g_vals, &grads)?;
    let mean = h.iter().sum::<f64>() / n_mc as f64;
    let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_mc - 1) as f64;
    let stderr = (var / n_mc as f64).sqrt();
    Ok(MeanZeroReport {
        estimate: mean,
        stderr,
        n_mc,
        passed: mean.abs() <= 4.0 * stderr,
    })
}
