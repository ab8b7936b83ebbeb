//! Bounded-variable revised simplex.
//!
//! Every row `lo ≤ aᵀx ≤ hi` gets a boxed logical variable `s = aᵀx`, so the
//! working system is `A x - s = 0` with all variables boxed. Nonbasic
//! variables may rest anywhere inside their box and can move either way.
//!
//! Two entry points share the factorization and pricing machinery:
//!
//! * [`Method::Primal`] starts from the all-logical basis with structural
//!   variables at the point of their box closest to zero, which must satisfy
//!   every row. Pricing is Dantzig's rule; after a run of degenerate pivots
//!   the solver switches to Bland's smallest-index rule until the objective
//!   moves again. The ratio test is Harris' two-pass test.
//! * [`Method::Dual`] starts from the all-logical basis with every
//!   structural variable at the bound its cost favours, which is dual
//!   feasible, and removes row violations with dual simplex pivots (largest
//!   violation leaves, Harris ratio test on the reduced costs, same Bland
//!   fallback). The primal loop then runs from the final basis to clean up
//!   any reduced costs left slightly infeasible by the tolerances.
//!
//! Either way the result is certified by the duality gap of the final row
//! multipliers and an independent residual check.

use log::debug;

use super::lu::{BasisFactor, Singular, SparseCol};
use super::{LinearProgram, LpSolution, LpSolver, LpStatus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Primal,
    /// Dual phase from the box optimum followed by primal clean-up.
    Dual,
}

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub method: Method,
    /// Bound violation allowed for basic variables.
    pub feasibility_tol: f64,
    /// Required relative duality gap at termination.
    pub optimality_tol: f64,
    /// Reduced-cost threshold on the objective scaled to unit max norm.
    pub reduced_cost_tol: f64,
    /// Reduced-cost sign violation tolerated by the dual ratio test.
    pub dual_feasibility_tol: f64,
    pub pivot_tol: f64,
    pub refactor_interval: usize,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            method: Method::Dual,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-7,
            reduced_cost_tol: 1e-12,
            dual_feasibility_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_interval: 100,
            stall_limit: 200,
            max_iterations: 5_000_000,
        }
    }
}

/// The built-in solver backend.
#[derive(Clone, Debug, Default)]
pub struct SimplexSolver {
    pub options: SimplexOptions,
}

impl SimplexSolver {
    pub fn new(options: SimplexOptions) -> Self {
        Self { options }
    }

    pub fn primal() -> Self {
        Self::new(SimplexOptions {
            method: Method::Primal,
            ..SimplexOptions::default()
        })
    }

    pub fn dual() -> Self {
        Self::new(SimplexOptions {
            method: Method::Dual,
            ..SimplexOptions::default()
        })
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        let dual_start = self.options.method == Method::Dual && has_dual_start(lp);
        let mut s = Simplex::new(lp, &self.options, dual_start)?;
        if dual_start {
            s.run_dual()?;
        }
        s.run_primal()?;
        s.finish()
    }
}

/// Every variable with a nonzero cost has a finite bound on the side its
/// cost favours.
fn has_dual_start(lp: &LinearProgram) -> bool {
    (0..lp.num_vars()).all(|j| {
        let c = lp.objective[j];
        (c <= 0.0 || lp.var_upper[j].is_finite()) && (c >= 0.0 || lp.var_lower[j].is_finite())
    })
}

const NONBASIC: usize = usize::MAX;

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: &'a SimplexOptions,
    n: usize,
    m: usize,
    // structural columns, CSC
    col_start: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
    // logical columns are -e_i
    unit_rows: Vec<usize>,
    minus_one: Vec<f64>,
    cost: Vec<f64>,
    cost_scale: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    /// Reduced costs (zero for basic variables).
    dj: Vec<f64>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    factor: BasisFactor,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    /// Dual steepest-edge weights `‖e_pᵀ B⁻¹‖²` by basis position.
    edge_weights: Vec<f64>,
    // scratch
    alpha: Vec<f64>,
    rho: Vec<f64>,
    row_acc: Vec<f64>,
    row_touched: Vec<usize>,
    row_mark: Vec<bool>,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, opts: &'a SimplexOptions, dual_start: bool) -> Result<Self> {
        let n = lp.num_vars();
        let m = lp.num_rows();
        // CSC copy of A
        let mut counts = vec![0usize; n + 1];
        for &c in &lp.row_cols {
            counts[c + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let mut col_rows = vec![0; lp.row_cols.len()];
        let mut col_vals = vec![0.0; lp.row_cols.len()];
        for i in 0..m {
            for idx in lp.row_start[i]..lp.row_start[i + 1] {
                let c = lp.row_cols[idx];
                col_rows[fill[c]] = i;
                col_vals[fill[c]] = lp.row_vals[idx];
                fill[c] += 1;
            }
        }

        let cmax = lp.objective.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let cost_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| c * cost_scale).collect();
        cost.resize(n + m, 0.0);

        let mut lower = lp.var_lower.clone();
        let mut upper = lp.var_upper.clone();
        lower.extend_from_slice(&lp.row_lower);
        upper.extend_from_slice(&lp.row_upper);

        let mut value: Vec<f64> = (0..n)
            .map(|j| {
                let c = cost[j];
                if dual_start && c > 0.0 {
                    upper[j]
                } else if dual_start && c < 0.0 {
                    lower[j]
                } else {
                    0.0_f64.clamp(lower[j], upper[j])
                }
            })
            .collect();
        let act = lp.row_activities(&value);
        if !dual_start {
            for (i, &a) in act.iter().enumerate() {
                let (lo, hi) = (lower[n + i], upper[n + i]);
                if a < lo - opts.feasibility_tol || a > hi + opts.feasibility_tol {
                    return Err(Error::Solver(format!(
                        "starting point violates row {i}: activity {a} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        value.extend(act);

        let basis: Vec<usize> = (n..n + m).collect();
        let mut pos_of = vec![NONBASIC; n + m];
        for (p, &v) in basis.iter().enumerate() {
            pos_of[v] = p;
        }
        let unit_rows: Vec<usize> = (0..m).collect();
        let minus_one = vec![-1.0; m];
        let cols: Vec<SparseCol<'_>> = (0..m)
            .map(|i| SparseCol {
                rows: &unit_rows[i..i + 1],
                vals: &minus_one[i..i + 1],
            })
            .collect();
        let factor = BasisFactor::factor(m, &cols)
            .map_err(|_| Error::Solver("logical basis is singular".into()))?;

        let mut s = Self {
            lp,
            opts,
            n,
            m,
            col_start,
            col_rows,
            col_vals,
            unit_rows,
            minus_one,
            cost,
            cost_scale,
            lower,
            upper,
            value,
            dj: vec![0.0; n + m],
            basis,
            pos_of,
            factor,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            edge_weights: vec![1.0; m],
            alpha: vec![0.0; m],
            rho: vec![0.0; m],
            row_acc: vec![0.0; n],
            row_touched: Vec::new(),
            row_mark: vec![false; n],
        };
        s.compute_duals();
        Ok(s)
    }

    fn column(&self, j: usize) -> SparseCol<'_> {
        if j < self.n {
            let r = self.col_start[j]..self.col_start[j + 1];
            SparseCol {
                rows: &self.col_rows[r.clone()],
                vals: &self.col_vals[r],
            }
        } else {
            let i = j - self.n;
            SparseCol {
                rows: &self.unit_rows[i..i + 1],
                vals: &self.minus_one[i..i + 1],
            }
        }
    }

    fn refactor(&mut self) -> Result<()> {
        loop {
            let cols: Vec<SparseCol<'_>> = self.basis.iter().map(|&j| self.column(j)).collect();
            match BasisFactor::factor(self.m, &cols) {
                Ok(f) => {
                    self.factor = f;
                    return Ok(());
                }
                Err(Singular {
                    positions,
                    free_rows,
                }) => {
                    debug!(
                        "basis singular at {} positions, repairing with logicals",
                        positions.len()
                    );
                    for (&p, &r) in positions.iter().zip(&free_rows) {
                        let logical = self.n + r;
                        if self.pos_of[logical] != NONBASIC {
                            return Err(Error::Solver("unrepairable singular basis".into()));
                        }
                        let out = self.basis[p];
                        self.pos_of[out] = NONBASIC;
                        self.value[out] = self.value[out].clamp(self.lower[out], self.upper[out]);
                        self.basis[p] = logical;
                        self.pos_of[logical] = p;
                    }
                }
            }
        }
    }

    fn needs_refactor(&self) -> bool {
        self.factor.num_etas() >= self.opts.refactor_interval
            || self.factor.eta_nnz() > 4 * self.factor.factor_nnz() + 4 * self.m
    }

    fn refresh(&mut self) -> Result<()> {
        self.refactor()?;
        self.compute_primal();
        self.compute_duals();
        Ok(())
    }

    fn check_iteration_limit(&self) -> Result<()> {
        if self.iterations >= self.opts.max_iterations {
            return Err(Error::Solver(format!(
                "iteration limit {} reached",
                self.opts.max_iterations
            )));
        }
        Ok(())
    }

    /// Recomputes basic values from the nonbasic ones: `B x_B = -N x_N`.
    fn compute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos_of[j] != NONBASIC {
                continue;
            }
            let v = self.value[j];
            if v == 0.0 {
                continue;
            }
            let col = self.column(j);
            for (&r, &a) in col.rows.iter().zip(col.vals) {
                rhs[r] -= a * v;
            }
        }
        self.factor.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.value[j] = rhs[p];
        }
    }

    /// Row multipliers `y = B⁻ᵀ c_B`, in scaled units.
    fn duals(&mut self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y);
        y
    }

    fn compute_duals(&mut self) {
        let y = self.duals();
        for j in 0..self.n {
            let mut d = self.cost[j];
            for idx in self.col_start[j]..self.col_start[j + 1] {
                d -= y[self.col_rows[idx]] * self.col_vals[idx];
            }
            self.dj[j] = d;
        }
        for i in 0..self.m {
            self.dj[self.n + i] = y[i];
        }
        for &j in &self.basis {
            self.dj[j] = 0.0;
        }
    }

    /// Loads `alpha = B⁻¹ a_q`, indexed by basis position.
    fn load_column(&mut self, q: usize) -> Vec<f64> {
        let mut alpha = std::mem::take(&mut self.alpha);
        alpha.iter_mut().for_each(|v| *v = 0.0);
        let col = self.column(q);
        for (&r, &v) in col.rows.iter().zip(col.vals) {
            alpha[r] = v;
        }
        self.factor.ftran(&mut alpha);
        alpha
    }

    /// Computes the pivot row `e_rᵀ B⁻¹ [A, -I]`. Structural entries are
    /// left in `row_acc` (listed in `row_touched`), logical entries are
    /// `-rho[i]` for the returned `rho`.
    fn pivot_row(&mut self, r: usize) -> Vec<f64> {
        let mut rho = std::mem::take(&mut self.rho);
        rho.iter_mut().for_each(|v| *v = 0.0);
        rho[r] = 1.0;
        self.factor.btran(&mut rho);
        for (i, &ri) in rho.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            let (cols, vals) = self.lp.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if !self.row_mark[c] {
                    self.row_mark[c] = true;
                    self.row_touched.push(c);
                }
                self.row_acc[c] += ri * v;
            }
        }
        rho
    }

    fn clear_pivot_row(&mut self, rho: Vec<f64>) {
        for &c in &self.row_touched {
            self.row_acc[c] = 0.0;
            self.row_mark[c] = false;
        }
        self.row_touched.clear();
        self.rho = rho;
    }

    /// Updates reduced costs with the computed pivot row; `q` enters at
    /// position `r`.
    fn update_duals(&mut self, q: usize, r: usize, alpha_rq: f64, rho: &[f64]) {
        let theta = self.dj[q] / alpha_rq;
        let leaving = self.basis[r];
        for (i, &ri) in rho.iter().enumerate() {
            let logical = self.n + i;
            if ri != 0.0 && self.pos_of[logical] == NONBASIC {
                self.dj[logical] += theta * ri;
            }
        }
        for &c in &self.row_touched {
            if self.pos_of[c] == NONBASIC {
                self.dj[c] -= theta * self.row_acc[c];
            }
        }
        self.dj[q] = 0.0;
        self.dj[leaving] = -theta;
    }

    /// Moves the entering variable by `step` along `alpha`.
    fn move_primal(&mut self, q: usize, step: f64, alpha: &[f64]) {
        if step == 0.0 {
            return;
        }
        self.value[q] += step;
        for (p, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[p];
                self.value[j] -= step * a;
            }
        }
    }

    fn swap_basis(&mut self, q: usize, r: usize, alpha: &[f64]) {
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.pos_of[q] = r;
        self.pos_of[leaving] = NONBASIC;
        self.factor.push_eta(r, alpha);
    }

    fn note_progress(&mut self, gain: f64) {
        if gain <= 1e-14 {
            self.degenerate_run += 1;
            if self.degenerate_run > self.opts.stall_limit && !self.bland {
                debug!(
                    "switching to Bland's rule after {} degenerate pivots",
                    self.degenerate_run
                );
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    // ----- primal -----

    /// Entering variable and direction (`+1` increase, `-1` decrease).
    fn price(&self) -> Option<(usize, f64)> {
        let tol = self.opts.reduced_cost_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            if self.pos_of[j] != NONBASIC {
                continue;
            }
            let d = self.dj[j];
            let dir = if d > tol && self.value[j] < self.upper[j] {
                1.0
            } else if d < -tol && self.value[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run_primal(&mut self) -> Result<()> {
        self.bland = false;
        self.degenerate_run = 0;
        let mut fresh = true;
        loop {
            self.check_iteration_limit()?;
            if self.needs_refactor() {
                self.refresh()?;
                fresh = true;
            }
            let Some((q, dir)) = self.price() else {
                if fresh {
                    return Ok(());
                }
                self.refresh()?;
                fresh = true;
                continue;
            };
            fresh = false;
            self.iterations += 1;
            self.primal_iterate(q, dir)?;
        }
    }

    fn primal_iterate(&mut self, q: usize, dir: f64) -> Result<()> {
        let alpha = self.load_column(q);
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;
        let flip = if dir > 0.0 {
            self.upper[q] - self.value[q]
        } else {
            self.value[q] - self.lower[q]
        };

        // Harris pass 1: largest step keeping basics within relaxed bounds.
        let mut t_max = f64::INFINITY;
        for (p, &a) in alpha.iter().enumerate() {
            if a.abs() <= ptol {
                continue;
            }
            let j = self.basis[p];
            let rate = -dir * a;
            let room = if rate < 0.0 {
                (self.value[j] - self.lower[j] + ftol) / -rate
            } else {
                (self.upper[j] - self.value[j] + ftol) / rate
            };
            if room < t_max {
                t_max = room;
            }
        }

        let leave = if flip <= t_max {
            None
        } else {
            // Pass 2: among blocking rows within t_max, the largest pivot.
            let mut best: Option<(usize, f64, f64)> = None;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= ptol {
                    continue;
                }
                let j = self.basis[p];
                let rate = -dir * a;
                let (ratio, bound) = if rate < 0.0 {
                    ((self.value[j] - self.lower[j]) / -rate, self.lower[j])
                } else {
                    ((self.upper[j] - self.value[j]) / rate, self.upper[j])
                };
                if ratio > t_max {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bp, _, _)) => {
                        if self.bland {
                            let ba = alpha[bp].abs();
                            let bj = self.basis[bp];
                            a.abs() > ba * 10.0 || (a.abs() * 10.0 >= ba && j < bj)
                        } else {
                            a.abs() > alpha[bp].abs()
                        }
                    }
                };
                if better {
                    best = Some((p, ratio.max(0.0), bound));
                }
            }
            match best {
                Some(b) => Some(b),
                None if flip.is_finite() => None,
                None => {
                    self.alpha = alpha;
                    return Err(Error::Solver("problem is unbounded".into()));
                }
            }
        };

        let step = match leave {
            None => flip,
            Some((_, t, _)) => t,
        };
        self.note_progress(step * self.dj[q].abs());
        self.move_primal(q, dir * step, &alpha);

        match leave {
            None => {
                self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some((r, _, bound)) => {
                let leaving = self.basis[r];
                self.value[leaving] = bound;
                let rho = self.pivot_row(r);
                self.update_duals(q, r, alpha[r], &rho);
                self.clear_pivot_row(rho);
                self.swap_basis(q, r, &alpha);
            }
        }
        self.alpha = alpha;
        Ok(())
    }

    // ----- dual -----

    /// Basis position with the largest bound violation, and the bound it
    /// moves to.
    fn choose_leaving(&self) -> Option<(usize, f64)> {
        let tol = self.opts.feasibility_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_key = 0.0;
        for (p, &j) in self.basis.iter().enumerate() {
            let v = self.value[j];
            let (excess, bound) = if v < self.lower[j] - tol {
                (self.lower[j] - v, self.lower[j])
            } else if v > self.upper[j] + tol {
                (v - self.upper[j], self.upper[j])
            } else {
                continue;
            };
            if self.bland {
                if best.map_or(true, |(bp, _)| j < self.basis[bp]) {
                    best = Some((p, bound));
                }
            } else if excess * excess / self.edge_weights[p] > best_key {
                best_key = excess * excess / self.edge_weights[p];
                best = Some((p, bound));
            }
        }
        best
    }

    fn run_dual(&mut self) -> Result<()> {
        self.bland = false;
        self.degenerate_run = 0;
        let mut fresh = true;
        loop {
            self.check_iteration_limit()?;
            if self.needs_refactor() {
                self.refresh()?;
                fresh = true;
            }
            let Some((r, bound)) = self.choose_leaving() else {
                if fresh {
                    return Ok(());
                }
                self.refresh()?;
                fresh = true;
                continue;
            };
            fresh = false;
            self.iterations += 1;
            
            self.dual_iterate(r, bound)?;
        }
    }

    fn dual_iterate(&mut self, r: usize, bound: f64) -> Result<()> {
        let leaving = self.basis[r];
        // Basic r must rise when it is below its lower bound.
        let up = self.value[leaving] < bound;
        let rho = self.pivot_row(r);
        let ptol = self.opts.pivot_tol;
        let dtol = self.opts.dual_feasibility_tol;

        // Candidates: (variable, pivot-row entry, direction, ratio).
        let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
        let mut consider = |j: usize, a: f64, s: &Self| {
            if a.abs() <= ptol || s.pos_of[j] != NONBASIC {
                return;
            }
            // x_{B_r} changes by -a Δx_j.
            let dir = if up { -a.signum() } else { a.signum() };
            let movable = if dir > 0.0 {
                s.value[j] < s.upper[j]
            } else {
                s.value[j] > s.lower[j]
            };
            if movable {
                let slack = (-s.dj[j] * dir).max(0.0);
                cands.push((j, a, dir, slack / a.abs()));
            }
        };
        for &c in &self.row_touched {
            consider(c, self.row_acc[c], self);
        }
        for (i, &ri) in rho.iter().enumerate() {
            if ri != 0.0 {
                consider(self.n + i, -ri, self);
            }
        }
        if cands.is_empty() {
            self.clear_pivot_row(rho);
            return Err(Error::Solver("problem is infeasible".into()));
        }
        cands.sort_by(|x, y| x.3.total_cmp(&y.3).then(x.0.cmp(&y.0)));

        // Bound flipping: pass breakpoints while the dual slope stays
        // positive, flipping those variables to their opposite bound.
        let mut slope = (self.value[leaving] - bound).abs();
        let mut first = 0;
        while first + 1 < cands.len() {
            let (j, a, _, _) = cands[first];
            let range = self.upper[j] - self.lower[j];
            let next = slope - a.abs() * range;
            if !(next >= 0.0) || self.bland {
                break;
            }
            slope = next;
            first += 1;
        }
        // Harris pass among the remaining breakpoints.
        let rest = &cands[first..];
        let t_max = rest
            .iter()
            .map(|&(_, a, _, t)| t + dtol / a.abs())
            .fold(f64::INFINITY, f64::min);
        let mut pick = first;
        for (k, &(j, a, _, t)) in rest.iter().enumerate() {
            if t > t_max {
                break;
            }
            let (bj, ba, _, _) = cands[pick];
            let better = if self.bland {
                a.abs() > ba.abs() * 10.0 || (a.abs() * 10.0 >= ba.abs() && j < bj)
            } else {
                a.abs() > ba.abs()
            };
            if better {
                pick = first + k;
            }
        }
        let (q, alpha_rq, _, ratio) = cands[pick];

        let mut flipped = false;
        if first > 0 {
            let mut rhs = vec![0.0; self.m];
            for &(j, _, dir, _) in &cands[..first] {
                let target = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                let delta = target - self.value[j];
                self.value[j] = target;
                let col = self.column(j);
                for (&row, &v) in col.rows.iter().zip(col.vals) {
                    rhs[row] += v * delta;
                }
            }
            self.factor.ftran(&mut rhs);
            for (p, &v) in rhs.iter().enumerate() {
                if v != 0.0 {
                    let j = self.basis[p];
                    self.value[j] -= v;
                }
            }
            flipped = true;
        }

        let alpha = self.load_column(q);
        let pivot = alpha[r];
        let drift = (pivot - alpha_rq).abs() > 1e-7 * (1.0 + alpha_rq.abs());
        self.update_edge_weights(r, &alpha, &rho);
        let excess = self.value[leaving] - bound;
        self.note_progress(if flipped { 1.0 } else { ratio * excess.abs() });
        self.move_primal(q, excess / pivot, &alpha);
        self.value[leaving] = bound;
        self.update_duals(q, r, alpha_rq, &rho);
        self.clear_pivot_row(rho);
        self.swap_basis(q, r, &alpha);
        self.alpha = alpha;
        if drift {
            debug!("pivot mismatch {pivot} vs {alpha_rq}, refactoring");
            self.refresh()?;
        }
        Ok(())
    }

    fn update_edge_weights(&mut self, r: usize, alpha: &[f64], rho: &[f64]) {
        let mut tau = rho.to_vec();
        self.factor.ftran(&mut tau);
        let pivot = alpha[r];
        let wr = self.edge_weights[r];
        for (p, &a) in alpha.iter().enumerate() {
            if p == r || a == 0.0 {
                continue;
            }
            let ratio = a / pivot;
            let w = self.edge_weights[p] - 2.0 * ratio * tau[p] + ratio * ratio * wr;
            self.edge_weights[p] = w.max(ratio * ratio).max(1e-12);
        }
        self.edge_weights[r] = (wr / (pivot * pivot)).max(1e-12);
    }

    fn finish(mut self) -> Result<LpSolution> {
        let n = self.n;
        let x: Vec<f64> = self.value[..n].to_vec();
        let y_scaled = self.duals();
        let y: Vec<f64> = y_scaled.iter().map(|v| v / self.cost_scale).collect();
        let objective = self.lp.objective_value(&x);
        let primal_residual = self.lp.max_violation(&x);
        let bound = self.lp.dual_bound(&y);
        let relative_gap = (bound - objective) / objective.abs().max(1.0);
        debug!(
            "simplex: {} iterations, objective {objective}, residual {primal_residual:e}, gap {relative_gap:e}",
            self.iterations
        );
        if primal_residual > self.opts.feasibility_tol {
            return Err(Error::Solver(format!(
                "primal residual {primal_residual:e} exceeds {:e}",
                self.opts.feasibility_tol
            )));
        }
        if relative_gap > self.opts.optimality_tol {
            return Err(Error::Solver(format!(
                "relative duality gap {relative_gap:e} exceeds {:e}",
                self.opts.optimality_tol
            )));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective,
            x,
            row_duals: y,
            iterations: self.iterations,
            primal_residual,
            relative_gap,
        })
    }
}
