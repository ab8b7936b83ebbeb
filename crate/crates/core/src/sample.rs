//! Weighted point sets and their CSV representation.
//!
//! A sample file holds one point per row, comma separated. Lines starting
//! with `#` are treated as comments/headers and skipped, as are blank lines.
//! In [`WeightMode::Column`] the last column of every row is the point's
//! probability weight.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ weights = 1` for weights handed to the constructors.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance on `Σ weights = 1` accepted when reading a weight column.
pub const FILE_WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Every point gets mass `1/n`.
    Uniform,
    /// Trailing column holds the point masses.
    Column,
}

/// Neumaier-compensated sum.
fn exact_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for &x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// A discrete probability measure `Σ_i q_i δ_{x_i}` on `R^d`.
///
/// Points are stored row-major. Points are pairwise distinct, weights are
/// strictly positive and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    n: usize,
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    /// Builds a sample from rows and explicit weights.
    pub fn new(rows: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let (n, d, points) = flatten(rows)?;
        Self::from_flat(n, d, points, weights)
    }

    /// Builds a sample where every point gets mass `1/n`.
    pub fn uniform(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (n, d, points) = flatten(rows)?;
        let w = 1.0 / n as f64;
        Self::from_flat(n, d, points, vec![w; n])
    }

    /// Builds a sample from a row-major buffer of `n * d` coordinates.
    pub fn from_flat(n: usize, d: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidSample(format!(
                "need n >= 1 and d >= 1, got n = {n}, d = {d}"
            )));
        }
        if points.len() != n * d {
            return Err(Error::InvalidSample(format!(
                "expected {} coordinates, got {}",
                n * d,
                points.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite coordinate in row {}",
                pos / d
            )));
        }
        for (row, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight { row, weight: w });
            }
        }
        let sum = exact_sum(&weights);
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { sum });
        }
        check_distinct(d, &points)?;
        Ok(Self {
            n,
            d,
            points,
            weights,
        })
    }

    /// Uniform sample on the first `k` points of `self`.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidSample(format!(
                "prefix length {k} outside 1..={}",
                self.n
            )));
        }
        let w = 1.0 / k as f64;
        Ok(Self {
            n: k,
            d: self.d,
            points: self.points[..k * self.d].to_vec(),
            weights: vec![w; k],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    /// Row-major coordinate buffer.
    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ_i q_i x_i`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for (x, &w) in self.points().zip(&self.weights) {
            for (mk, xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    /// Serializes in the sample CSV format. Values are written with the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_csv(&self, mode: WeightMode) -> String {
        let mut out = String::new();
        for (x, w) in self.points().zip(&self.weights) {
            for (k, v) in x.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            if mode == WeightMode::Column {
                write!(out, ",{w}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the sample CSV format.
    pub fn from_csv_str(text: &str, mode: WeightMode) -> Result<Self> {
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut values = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: format!("{f:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            match width {
                None => width = Some(values.len()),
                Some(w) if w != values.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected {w} columns, got {}", values.len()),
                    })
                }
                _ => {}
            }
            if mode == WeightMode::Column {
                if values.len() < 2 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: "weight column mode needs at least 2 columns".into(),
                    });
                }
                weights.push(values.pop().unwrap());
            }
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(Error::InvalidSample("no data rows".into()));
        }
        match mode {
            WeightMode::Uniform => Self::uniform(rows),
            WeightMode::Column => {
                for (row, &w) in weights.iter().enumerate() {
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(Error::NonPositiveWeight { row, weight: w });
                    }
                }
                let sum = exact_sum(&weights);
                if (sum - 1.0).abs() > FILE_WEIGHT_SUM_TOL {
                    return Err(Error::WeightSum { sum });
                }
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    // rounding-level drift from a text round trip
                    weights.iter_mut().for_each(|w| *w /= sum);
                }
                Self::new(rows, weights)
            }
        }
    }
}

/// Reads a sample CSV file.
pub fn load_sample(path: impl AsRef<Path>, mode: WeightMode) -> Result<WeightedSample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    WeightedSample::from_csv_str(&text, mode)
}

/// Writes a sample CSV file.
pub fn save_sample(
    sample: &WeightedSample,
    path: impl AsRef<Path>,
    mode: WeightMode,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sample.to_csv(mode)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn flatten(rows: Vec<Vec<f64>>) -> Result<(usize, usize, Vec<f64>)> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(n * d);
    for (i, r) in rows.into_iter().enumerate() {
        if r.len() != d {
            return Err(Error::InvalidSample(format!(
                "row {i} has {} coordinates, expected {d}",
                r.len()
            )));
        }
        flat.extend(r);
    }
    Ok((n, d, flat))
}

fn check_distinct(d: usize, points: &[f64]) -> Result<()> {
    // `+ 0.0` maps -0.0 to 0.0 so that numerically equal points collide.
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len() / d);
    for (i, x) in points.chunks_exact(d).enumerate() {
        let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicatePoint { first, second: i });
        }
        seen.insert(key, i);
    }
    Ok(())
}
