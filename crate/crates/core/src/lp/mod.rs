//! Linear programs with boxed variables and two-sided rows, and the solver
//! interface used by the coordinate Stein programs.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    cᵀx
//! subject to  row_lower ≤ A x ≤ row_upper
//!             var_lower ≤ x ≤ var_upper
//! ```

mod barrier;
mod lu;
mod simplex;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub use barrier::{BarrierOptions, BarrierSolver};
pub use simplex::{Method, SimplexOptions, SimplexSolver};

/// A sparse linear program in row-wise storage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    var_lower: Vec<f64>,
    var_upper: Vec<f64>,
    row_start: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
}

impl LinearProgram {
    /// `num_vars` variables with zero objective and bounds `[0, 0]`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            var_lower: vec![0.0; num_vars],
            var_upper: vec![0.0; num_vars],
            row_start: vec![0],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.row_vals.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.var_lower[j] = lower;
        self.var_upper[j] = upper;
    }

    pub fn var_bounds(&self, j: usize) -> (f64, f64) {
        (self.var_lower[j], self.var_upper[j])
    }

    /// Appends `lower ≤ Σ coef·x_col ≤ upper` and returns its index.
    pub fn add_row(&mut self, entries: &[(usize, f64)], lower: f64, upper: f64) -> usize {
        for &(c, v) in entries {
            if v != 0.0 {
                self.row_cols.push(c);
                self.row_vals.push(v);
            }
        }
        self.row_start.push(self.row_cols.len());
        self.row_lower.push(lower);
        self.row_upper.push(upper);
        self.row_lower.len() - 1
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_start[i]..self.row_start[i + 1];
        (&self.row_cols[r.clone()], &self.row_vals[r])
    }

    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        (self.row_lower[i], self.row_upper[i])
    }

    /// `A x`.
    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_rows())
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any variable bound or row bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let var = x
            .iter()
            .zip(self.var_lower.iter().zip(&self.var_upper))
            .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0));
        let rows = self
            .row_activities(x)
            .into_iter()
            .zip(self.row_lower.iter().zip(&self.row_upper))
            .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0))
            .collect::<Vec<_>>();
        var.chain(rows).fold(0.0, f64::max)
    }

    /// Upper bound on the optimum implied by row multipliers `y`:
    /// `Σ_j max(d_j l_j, d_j u_j) + Σ_i max(y_i lo_i, y_i hi_i)` with
    /// `d = c - Aᵀy`. Valid for any `y`.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        let mut d = self.objective.clone();
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                let (cols, vals) = self.row(i);
                for (&c, v) in cols.iter().zip(vals) {
                    d[c] -= yi * v;
                }
            }
        }
        let box_term = |d: f64, lo: f64, hi: f64| {
            if d > 0.0 {
                d * hi
            } else if d < 0.0 {
                d * lo
            } else {
                0.0
            }
        };
        let vars: f64 = d
            .iter()
            .zip(self.var_lower.iter().zip(&self.var_upper))
            .map(|(&dj, (&lo, &hi))| box_term(dj, lo, hi))
            .sum();
        let rows: f64 = y
            .iter()
            .zip(self.row_lower.iter().zip(&self.row_upper))
            .map(|(&yi, (&lo, &hi))| box_term(yi, lo, hi))
            .sum();
        vars + rows
    }

    /// Sparse triplet dump:
    ///
    /// ```text
    /// lp maximize <num_vars> <num_rows> <nnz>
    /// c <j> <value>            objective coefficients (nonzero only)
    /// b <j> <lower> <upper>    variable bounds
    /// r <i> <lower> <upper>    row bounds
    /// a <i> <j> <value>        constraint matrix entries
    /// ```
    ///
    /// When `expand_rows` is set each two-sided row `lo ≤ aᵀx ≤ hi` is
    /// written as the two inequalities `aᵀx ≤ hi` and `-aᵀx ≤ -lo` with
    /// `-inf` lower bounds.
    pub fn to_triplet_text(&self, expand_rows: bool) -> String {
        let rows = if expand_rows { 2 * self.num_rows() } else { self.num_rows() };
        let nnz = if expand_rows { 2 * self.num_nonzeros() } else { self.num_nonzeros() };
        let mut out = String::new();
        writeln!(out, "lp maximize {} {} {}", self.num_vars(), rows, nnz).unwrap();
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(out, "c {j} {c:e}").unwrap();
            }
        }
        for j in 0..self.num_vars() {
            writeln!(out, "b {j} {:e} {:e}", self.var_lower[j], self.var_upper[j]).unwrap();
        }
        for i in 0..self.num_rows() {
            let (cols, vals) = self.row(i);
            if expand_rows {
                writeln!(out, "r {} -inf {:e}", 2 * i, self.row_upper[i]).unwrap();
                writeln!(out, "r {} -inf {:e}", 2 * i + 1, -self.row_lower[i]).unwrap();
                for (c, v) in cols.iter().zip(vals) {
                    writeln!(out, "a {} {c} {v:e}", 2 * i).unwrap();
                    writeln!(out, "a {} {c} {:e}", 2 * i + 1, -v).unwrap();
                }
            } else {
                writeln!(out, "r {i} {:e} {:e}", self.row_lower[i], self.row_upper[i]).unwrap();
                for (c, v) in cols.iter().zip(vals) {
                    writeln!(out, "a {i} {c} {v:e}").unwrap();
                }
            }
        }
        out
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.row_cols.iter().any(|&c| c >= n) {
            return Err(Error::Solver("row references a missing variable".into()));
        }
        let finite = self.objective.iter().chain(&self.row_vals).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Solver("non-finite objective or matrix entry".into()));
        }
        let bad_box = self
            .var_lower
            .iter()
            .zip(&self.var_upper)
            .chain(self.row_lower.iter().zip(&self.row_upper))
            .any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi);
        if bad_box {
            return Err(Error::Solver("empty or NaN bound interval".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row multipliers certifying optimality through
    /// [`LinearProgram::dual_bound`].
    pub row_duals: Vec<f64>,
    pub iterations: usize,
    /// Largest bound or row violation at `x`.
    pub primal_residual: f64,
    /// `(dual_bound - objective) / max(1, |objective|)`.
    pub relative_gap: f64,
}

/// A backend able to solve [`LinearProgram`]s to optimality.
pub trait LpSolver: Send + Sync {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

/// Primal simplex for programs with at most `simplex_max_rows` rows,
/// otherwise the barrier method. A barrier result that cannot be certified
/// is retried with the dual simplex.
#[derive(Clone, Debug)]
pub struct AutoSolver {
    pub simplex_max_rows: usize,
    pub barrier: BarrierSolver,
}

impl Default for AutoSolver {
    fn default() -> Self {
        Self {
            simplex_max_rows: 2000,
            barrier: BarrierSolver::default(),
        }
    }
}

impl LpSolver for AutoSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        if lp.num_rows() <= self.simplex_max_rows {
            return SimplexSolver::primal().solve(lp);
        }
        match self.barrier.solve(lp) {
            Ok(sol) => Ok(sol),
            Err(crate::error::Error::Solver(msg)) => {
                log::warn!("barrier failed ({msg}); retrying with dual simplex");
                SimplexSolver::dual().solve(lp)
            }
            Err(e) => Err(e),
        }
    }
}
