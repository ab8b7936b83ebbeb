//! Validation oracles: exact 1-D Wasserstein distance, a coupling upper
//! bound on the discrepancy, and log-log trend fitting.

use serde::Serialize;

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::operators::OperatorData;
use crate::sample::WeightedSample;
use crate::steinlp::operator_for_sample;
use crate::target::TargetModel;

fn require_1d(s: &WeightedSample) -> Result<()> {
    if s.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: s.dim(),
        });
    }
    Ok(())
}

/// `W₁(s1, s2) = ∫ |F₁ - F₂|` for one-dimensional samples.
pub fn wasserstein_1d(s1: &WeightedSample, s2: &WeightedSample) -> Result<f64> {
    require_1d(s1)?;
    require_1d(s2)?;
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(s1.len() + s2.len());
    events.extend((0..s1.len()).map(|i| (s1.point(i)[0], s1.weight(i))));
    events.extend((0..s2.len()).map(|i| (s2.point(i)[0], -s2.weight(i))));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for w in events.windows(2) {
        diff += w[0].1;
        total += diff.abs() * (w[1].0 - w[0].0);
    }
    Ok(total)
}

/// How the two samples are coupled in [`coupled_upper_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Coupling {
    /// Quantile (monotone) coupling, one-dimensional samples only.
    Quantile,
    /// Repeatedly matches the closest pair with mass left.
    Greedy,
}

impl Coupling {
    pub fn for_dim(d: usize) -> Self {
        if d == 1 {
            Coupling::Quantile
        } else {
            Coupling::Greedy
        }
    }
}

/// `(i, l, mass)` triples of a coupling between `q` and `p`.
pub fn couple(q: &WeightedSample, p: &WeightedSample, how: Coupling) -> Result<Vec<(usize, usize, f64)>> {
    if q.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: p.dim(),
        });
    }
    match how {
        Coupling::Quantile => {
            require_1d(q)?;
            let order = |s: &WeightedSample| {
                let mut idx: Vec<usize> = (0..s.len()).collect();
                idx.sort_by(|&a, &b| s.point(a)[0].total_cmp(&s.point(b)[0]));
                idx
            };
            Ok(transport_in_order(q, p, &order(q), &order(p)))
        }
        Coupling::Greedy => {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(q.len() * p.len());
            for i in 0..q.len() {
                for l in 0..p.len() {
                    pairs.push((l1(q.point(i), p.point(l)), i, l));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut left_q = q.weights().to_vec();
            let mut left_p = p.weights().to_vec();
            let mut open_q = q.len();
            let mut out = Vec::new();
            for (_, i, l) in pairs {
                if open_q == 0 {
                    break;
                }
                if left_q[i] <= 0.0 || left_p[l] <= 0.0 {
                    continue;
                }
                let mass = left_q[i].min(left_p[l]);
                out.push((i, l, mass));
                left_q[i] -= mass;
                left_p[l] -= mass;
                if left_q[i] <= 1e-15 {
                    left_q[i] = 0.0;
                    open_q -= 1;
                }
                if left_p[l] <= 1e-15 {
                    left_p[l] = 0.0;
                }
            }
            Ok(out)
        }
    }
}

fn transport_in_order(
    q: &WeightedSample,
    p: &WeightedSample,
    oq: &[usize],
    op: &[usize],
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let (mut a, mut b) = (0, 0);
    let mut left_q = q.weight(oq[0]);
    let mut left_p = p.weight(op[0]);
    loop {
        let mass = left_q.min(left_p);
        if mass > 0.0 {
            out.push((oq[a], op[b], mass));
        }
        left_q -= mass;
        left_p -= mass;
        let q_done = left_q <= 1e-15;
        let p_done = left_p <= 1e-15;
        if q_done {
            a += 1;
            if a == oq.len() {
                break;
            }
            left_q = q.weight(oq[a]);
        }
        if p_done {
            b += 1;
            if b == op.len() {
                break;
            }
            left_p = p.weight(op[b]);
        }
    }
    out
}

fn l1(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct CoupledBound {
    pub value: f64,
    pub coupling: Coupling,
    /// `E‖X - Z‖₁` under the coupling.
    pub transport_cost: f64,
}

/// `E[2‖b(X)-b(Z)‖ + ‖m(X)-m(Z)‖ + (2‖b(Z)‖ + ‖m(Z)‖) min(‖X-Z‖, 2)]` under
/// an explicit coupling of `X ~ q` and `Z ~ p`. Vectors use `‖·‖₁`;
/// matrices use the entrywise `ℓ1` norm, which bounds `|⟨m, Ψ⟩|` for
/// entrywise `|Ψ| ≤ 1`.
pub fn coupled_upper_bound(
    q: &WeightedSample,
    p: &WeightedSample,
    op_q: &OperatorData,
    op_p: &OperatorData,
    how: Coupling,
) -> Result<CoupledBound> {
    if op_q.len() != q.len() || op_p.len() != p.len() {
        return Err(Error::InvalidParameter("operator data does not match the samples".into()));
    }
    let plan = couple(q, p, how)?;
    let mut value = 0.0;
    let mut cost = 0.0;
    for (i, l, mass) in plan {
        let (bx, bz) = (op_q.b(i), op_p.b(l));
        let (mx, mz) = (op_q.m(i), op_p.m(l));
        let dist = l1(q.point(i), p.point(l));
        let term = 2.0 * l1(bx, bz) + l1(mx, mz) + (2.0 * l1_norm(bz) + l1_norm(mz)) * dist.min(2.0);
        value += mass * term;
        cost += mass * dist;
    }
    Ok(CoupledBound {
        value,
        coupling: how,
        transport_cost: cost,
    })
}

/// [`coupled_upper_bound`] with operator data computed from `target` and
/// `spec`, and the coupling chosen by dimension.
pub fn coupled_upper_bound_for(
    q: &WeightedSample,
    p: &WeightedSample,
    target: &dyn TargetModel,
    spec: &DiffusionSpec,
) -> Result<CoupledBound> {
    let op_q = operator_for_sample(q, target, spec)?;
    let op_p = operator_for_sample(p, target, spec)?;
    coupled_upper_bound(q, p, &op_q, &op_p, Coupling::for_dim(q.dim()))
}

/// Least-squares fit of `log S = slope · log n + intercept`.
#[derive(Clone, Debug, Serialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub sizes: Vec<usize>,
}

pub fn fit_rate(values: &[(usize, f64)]) -> Result<TrendFit> {
    if values.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 sample sizes".into()));
    }
    if values.windows(2).any(|w| w[1].0 <= w[0].0) || values[0].0 == 0 {
        return Err(Error::InvalidParameter("sample sizes must be positive and strictly increasing".into()));
    }
    if let Some(&(n, s)) = values.iter().find(|(_, s)| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter(format!("value {s} at n = {n} is not positive")));
    }
    let xs: Vec<f64> = values.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|(_, s)| s.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(TrendFit {
        slope,
        intercept,
        residual_rms: (rss / k).sqrt(),
        sizes: values.iter().map(|(n, _)| *n).collect(),
    })
}
