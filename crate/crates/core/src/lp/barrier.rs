//! Primal-dual interior point method (Mehrotra predictor-corrector).
//!
//! The program is treated in inequality form `min -cᵀx` subject to every
//! finite variable bound and row bound as a separate inequality
//! `g_k(x) = C_k x - d_k ≥ 0` with slack `v_k` and multiplier `λ_k`. Each
//! Newton step solves the `n × n` normal system
//! `(Θ_x + Aᵀ Θ_r A) Δx = rhs` by a sparse Cholesky factorization whose
//! symbolic analysis (AMD ordering) is computed once.
//!
//! On convergence the point is clamped to the variable box and, when the
//! origin is feasible, pulled toward it just far enough to satisfy every
//! row exactly. Optimality is then certified like the simplex result, by the
//! duality gap of the row multipliers `y = λ_upper - λ_lower`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LltRef, SymbolicCholesky};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};
use log::debug;

use super::{LinearProgram, LpSolution, LpSolver, LpStatus};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BarrierOptions {
    /// Row or bound violation allowed in the returned point.
    pub feasibility_tol: f64,
    /// Required relative duality gap of the returned certificate.
    pub optimality_tol: f64,
    /// Certified relative gap at which the iteration stops early.
    pub convergence_tol: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-7,
            convergence_tol: 1e-10,
            max_iterations: 200,
            step_fraction: 0.995,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct BarrierSolver {
    pub options: BarrierOptions,
}

impl BarrierSolver {
    pub fn new(options: BarrierOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for BarrierSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        lp.validate()?;
        Ipm::new(lp, &self.options)?.run()
    }
}

/// One side of a bound: `sign * (x-part) - d ≥ 0`.
#[derive(Clone, Default)]
struct Side1 {
    active: Vec<bool>,
    d: Vec<f64>,
    v: Vec<f64>,
    lam: Vec<f64>,
}

impl Side1 {
    fn new(bounds: &[f64], sign: f64) -> Self {
        let active: Vec<bool> = bounds.iter().map(|b| b.is_finite()).collect();
        let d = bounds
            .iter()
            .map(|&b| if b.is_finite() { sign * b } else { 0.0 })
            .collect();
        let k = bounds.len();
        Self {
            active,
            d,
            v: vec![0.0; k],
            lam: vec![0.0; k],
        }
    }
}

/// Normal matrix `diag + Aᵀ diag(e) A`, lower triangle in CSC form.
struct Normal {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag_pos: Vec<usize>,
    /// For each row of A, `(value index, a_p * a_q)` contributions.
    row_pairs: Vec<Vec<(usize, f64)>>,
    symbolic: SymbolicCholesky<usize>,
    factor: Vec<f64>,
}

impl Normal {
    fn new(lp: &LinearProgram) -> Result<Self> {
        let n = lp.num_vars();
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for i in 0..lp.num_rows() {
            let (rc, _) = lp.row(i);
            for &p in rc {
                for &q in rc {
                    if p >= q {
                        cols[q].push(p);
                    }
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        for (j, c) in cols.iter_mut().enumerate() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr[j + 1] = row_idx.len();
        }
        let find = |r: usize, c: usize| -> usize {
            let slice = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            col_ptr[c] + slice.binary_search(&r).expect("pattern entry")
        };
        let diag_pos: Vec<usize> = (0..n).map(|j| find(j, j)).collect();
        let row_pairs: Vec<Vec<(usize, f64)>> = (0..lp.num_rows())
            .map(|i| {
                let (rc, rv) = lp.row(i);
                let mut pairs = Vec::new();
                for (a, (&p, &vp)) in rc.iter().zip(rv).enumerate() {
                    for (&q, &vq) in rc[..=a].iter().zip(&rv[..=a]) {
                        let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
                        pairs.push((find(hi, lo), vp * vq));
                    }
                }
                pairs
            })
            .collect();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(sym, Side::Lower, Default::default(), Default::default())
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let factor = vec![0.0; symbolic.len_val()];
        let nnz = row_idx.len();
        Ok(Self {
            n,
            col_ptr,
            row_idx,
            values: vec![0.0; nnz],
            diag_pos,
            row_pairs,
            symbolic,
            factor,
        })
    }

    fn assemble(&mut self, diag: &[f64], row_weight: &[f64]) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for (j, &dj) in diag.iter().enumerate() {
            self.values[self.diag_pos[j]] += dj;
        }
        for (pairs, &e) in self.row_pairs.iter().zip(row_weight) {
            if e == 0.0 {
                continue;
            }
            for &(idx, w) in pairs {
                self.values[idx] += e * w;
            }
        }
    }

    fn factorize(&mut self) -> Result<()> {
        let max_diag = self
            .diag_pos
            .iter()
            .map(|&p| self.values[p])
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let mut shifted = self.values.clone();
        let mut shift = 1e-20 * max_diag;
        let mut buf = MemBuffer::new(
            self.symbolic
                .factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()),
        );
        loop {
            for &p in &self.diag_pos {
                shifted[p] = self.values[p] + shift;
            }
            let sym = SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx);
            let mat = SparseColMatRef::new(sym, &shifted);
            let reg = LltRegularization {
                dynamic_regularization_delta: shift,
                dynamic_regularization_epsilon: shift,
            };
            let result = self.symbolic.factorize_numeric_llt::<f64>(
                &mut self.factor,
                mat,
                Side::Lower,
                reg,
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            );
            match result {
                Ok(_) => return Ok(()),
                Err(e) if shift > 1e-4 * max_diag => {
                    return Err(Error::Solver(format!("normal matrix factorization failed: {e:?}")));
                }
                Err(_) => shift *= 100.0,
            }
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let llt = LltRef::<'_, usize, f64>::new(&self.symbolic, &self.factor);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let n = self.n;
        llt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(rhs, n, 1),
            Par::Seq,
            MemStack::new(&mut buf),
        );
    }

    /// `y = H x` from the stored lower triangle.
    fn multiply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            for idx in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[idx];
                let v = self.values[idx];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
    }

    /// Solves with iterative refinement against the unshifted matrix.
    fn solve_refined(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve(&mut x);
        let mut hx = vec![0.0; self.n];
        let norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let mut last = f64::INFINITY;
        for _ in 0..MAX_REFINE {
            self.multiply(&x, &mut hx);
            let mut r: Vec<f64> = rhs.iter().zip(&hx).map(|(a, b)| a - b).collect();
            let rn = norm(&r);
            if !(rn < 0.5 * last) || rn <= 1e-15 * norm(rhs) {
                break;
            }
            last = rn;
            self.solve(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        x
    }
}

const MAX_REFINE: usize = 20;

struct Ipm<'a> {
    lp: &'a LinearProgram,
    opts: &'a BarrierOptions,
    n: usize,
    m: usize,
    cost: Vec<f64>,
    cost_scale: f64,
    x: Vec<f64>,
    xl: Side1,
    xu: Side1,
    rl: Side1,
    ru: Side1,
    normal: Normal,
}

/// Direction for all slacks and multipliers.
struct Step {
    dx: Vec<f64>,
    dv: [Vec<f64>; 4],
    dlam: [Vec<f64>; 4],
}

impl<'a> Ipm<'a> {
    fn new(lp: &'a LinearProgram, opts: &'a BarrierOptions) -> Result<Self> {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let cmax = lp.objective.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let cost_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
        let cost = lp.objective.iter().map(|c| c * cost_scale).collect();
        let x = (0..n)
            .map(|j| {
                let (lo, hi) = (lp.var_lower[j], lp.var_upper[j]);
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo.max(0.0) + 1.0,
                    (false, true) => hi.min(0.0) - 1.0,
                    (false, false) => 0.0,
                }
            })
            .collect();
        let neg = |v: &[f64]| v.iter().map(|b| -b).collect::<Vec<_>>();
        Ok(Self {
            lp,
            opts,
            n,
            m,
            cost,
            cost_scale,
            x,
            xl: Side1::new(&lp.var_lower, 1.0),
            xu: Side1::new(&neg(&lp.var_upper), 1.0),
            rl: Side1::new(&lp.row_lower, 1.0),
            ru: Side1::new(&neg(&lp.row_upper), 1.0),
            normal: Normal::new(lp)?,
        })
    }

    fn sides(&self) -> [&Side1; 4] {
        [&self.xl, &self.xu, &self.rl, &self.ru]
    }

    /// `C_k x` for each of the four inequality groups.
    fn constraint_values(&self, x: &[f64]) -> [Vec<f64>; 4] {
        let act = self.lp.row_activities(x);
        [
            x.to_vec(),
            x.iter().map(|v| -v).collect(),
            act.clone(),
            act.iter().map(|v| -v).collect(),
        ]
    }

    /// `Cᵀ w` for per-group weights.
    fn transpose_apply(&self, w: [&[f64]; 4]) -> Vec<f64> {
        let mut out: Vec<f64> = w[0].iter().zip(w[1]).map(|(a, b)| a - b).collect();
        for i in 0..self.m {
            let wi = w[2][i] - w[3][i];
            if wi != 0.0 {
                let (cols, vals) = self.lp.row(i);
                for (&c, &v) in cols.iter().zip(vals) {
                    out[c] += v * wi;
                }
            }
        }
        out
    }

    fn initialize(&mut self) {
        let g = self.constraint_values(&self.x.clone());
        for (side, gk) in [&mut self.xl, &mut self.xu, &mut self.rl, &mut self.ru]
            .into_iter()
            .zip(g.iter())
        {
            for k in 0..side.active.len() {
                if side.active[k] {
                    side.v[k] = (gk[k] - side.d[k]).max(1.0);
                    side.lam[k] = 1.0;
                }
            }
        }
    }

    fn complementarity(&self) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0;
        for s in self.sides() {
            for k in 0..s.active.len() {
                if s.active[k] {
                    sum += s.v[k] * s.lam[k];
                    count += 1;
                }
            }
        }
        (sum, count)
    }

    /// Dual residual `Cᵀλ + c`, primal residuals `v - (C x - d)`.
    fn residuals(&self) -> (Vec<f64>, [Vec<f64>; 4]) {
        let s = self.sides();
        let mut rd = self.transpose_apply([&s[0].lam, &s[1].lam, &s[2].lam, &s[3].lam]);
        for (r, c) in rd.iter_mut().zip(&self.cost) {
            *r += c;
        }
        let g = self.constraint_values(&self.x);
        let rp: [Vec<f64>; 4] = std::array::from_fn(|t| {
            let side = s[t];
            (0..side.active.len())
                .map(|k| {
                    if side.active[k] {
                        side.v[k] - (g[t][k] - side.d[k])
                    } else {
                        0.0
                    }
                })
                .collect()
        });
        (rd, rp)
    }

    fn factorize(&mut self) -> Result<()> {
        let theta = |s: &Side1, k: usize| if s.active[k] { s.lam[k] / s.v[k] } else { 0.0 };
        let diag: Vec<f64> = (0..self.n)
            .map(|j| theta(&self.xl, j) + theta(&self.xu, j))
            .collect();
        let row_w: Vec<f64> = (0..self.m)
            .map(|i| theta(&self.rl, i) + theta(&self.ru, i))
            .collect();
        self.normal.assemble(&diag, &row_w);
        self.normal.factorize()
    }

    /// Newton direction for complementarity targets `rc`.
    fn direction(&self, rd: &[f64], rp: &[Vec<f64>; 4], rc: &[Vec<f64>; 4]) -> Step {
        let s = self.sides();
        // w_k = (rc_k + λ_k rp_k) / v_k
        let w: [Vec<f64>; 4] = std::array::from_fn(|t| {
            let side = s[t];
            (0..side.active.len())
                .map(|k| {
                    if side.active[k] {
                        (rc[t][k] + side.lam[k] * rp[t][k]) / side.v[k]
                    } else {
                        0.0
                    }
                })
                .collect()
        });
        let ctw = self.transpose_apply([&w[0], &w[1], &w[2], &w[3]]);
        let rhs: Vec<f64> = rd.iter().zip(&ctw).map(|(a, b)| a + b).collect();
        let dx = self.normal.solve_refined(&rhs);
        let cdx = self.constraint_values(&dx);
        let mut dv: [Vec<f64>; 4] = Default::default();
        let mut dlam: [Vec<f64>; 4] = Default::default();
        for t in 0..4 {
            let side = s[t];
            let k_len = side.active.len();
            dv[t] = vec![0.0; k_len];
            dlam[t] = vec![0.0; k_len];
            for k in 0..k_len {
                if side.active[k] {
                    let dvk = cdx[t][k] - rp[t][k];
                    dv[t][k] = dvk;
                    dlam[t][k] = (rc[t][k] - side.lam[k] * dvk) / side.v[k];
                }
            }
        }
        Step { dx, dv, dlam }
    }

    fn max_steps(&self, step: &Step) -> (f64, f64) {
        let mut ap = 1.0_f64;
        let mut ad = 1.0_f64;
        for (t, side) in self.sides().into_iter().enumerate() {
            for k in 0..side.active.len() {
                if !side.active[k] {
                    continue;
                }
                if step.dv[t][k] < 0.0 {
                    ap = ap.min(-side.v[k] / step.dv[t][k]);
                }
                if step.dlam[t][k] < 0.0 {
                    ad = ad.min(-side.lam[k] / step.dlam[t][k]);
                }
            }
        }
        (ap, ad)
    }

    fn run(mut self) -> Result<LpSolution> {
        if self.n == 0 {
            return self.certify(0).into_result(self.opts);
        }
        self.initialize();
        let d_norm = self
            .sides()
            .iter()
            .flat_map(|s| s.d.iter())
            .fold(0.0_f64, |a, b| a.max(b.abs()));
        let mut best: Option<Candidate> = None;
        let mut iter = 0;
        loop {
            let (rd, rp) = self.residuals();
            let (comp, count) = self.complementarity();
            let mu = if count > 0 { comp / count as f64 } else { 0.0 };
            let pobj: f64 = -self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum::<f64>();
            let dobj: f64 = self
                .sides()
                .iter()
                .map(|s| {
                    (0..s.active.len())
                        .filter(|&k| s.active[k])
                        .map(|k| s.d[k] * s.lam[k])
                        .sum::<f64>()
                })
                .sum();
            let p_res = rp.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs())) / (1.0 + d_norm);
            let d_res = rd.iter().fold(0.0_f64, |a, b| a.max(b.abs())) / 2.0;
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            debug!("barrier {iter}: pobj {pobj:.12e} gap {gap:.2e} pres {p_res:.2e} dres {d_res:.2e} mu {mu:.2e}");
            if gap <= 1e-3 && p_res <= 1e-6 {
                let cand = self.certify(iter);
                debug!(
                    "barrier {iter}: certified gap {:.2e} residual {:.2e}",
                    cand.relative_gap, cand.primal_residual
                );
                if cand.primal_residual <= self.opts.feasibility_tol {
                    let merged = match best.take() {
                        Some(b) => b.merge(cand),
                        None => cand,
                    };
                    if merged.relative_gap <= self.opts.convergence_tol {
                        return merged.into_result(self.opts);
                    }
                    best = Some(merged);
                }
            }
            let stalled = mu <= 1e-13 * (1.0 + pobj.abs()) / count.max(1) as f64;
            if stalled || iter >= self.opts.max_iterations {
                return match best {
                    Some(cand) => cand.into_result(self.opts),
                    None => Err(Error::Solver(format!(
                        "barrier stopped after {iter} iterations without a certified optimum (gap {gap:e})"
                    ))),
                };
            }
            iter += 1;
            self.factorize()?;

            // Predictor.
            let s = self.sides();
            let rc_aff: [Vec<f64>; 4] = std::array::from_fn(|t| {
                s[t].v.iter().zip(&s[t].lam).map(|(v, l)| -v * l).collect()
            });
            let aff = self.direction(&rd, &rp, &rc_aff);
            let (ap, ad) = self.max_steps(&aff);
            let mut comp_aff = 0.0;
            for (t, side) in self.sides().into_iter().enumerate() {
                for k in 0..side.active.len() {
                    if side.active[k] {
                        comp_aff += (side.v[k] + ap * aff.dv[t][k]) * (side.lam[k] + ad * aff.dlam[t][k]);
                    }
                }
            }
            let mu_aff = comp_aff / count.max(1) as f64;
            let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };

            // Corrector.
            let s = self.sides();
            let rc: [Vec<f64>; 4] = std::array::from_fn(|t| {
                (0..s[t].active.len())
                    .map(|k| {
                        if s[t].active[k] {
                            sigma * mu - s[t].v[k] * s[t].lam[k] - aff.dv[t][k] * aff.dlam[t][k]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            });
            let step = self.direction(&rd, &rp, &rc);
            let (ap, ad) = self.max_steps(&step);
            let ap = (self.opts.step_fraction * ap).min(1.0);
            let ad = (self.opts.step_fraction * ad).min(1.0);

            for (x, dx) in self.x.iter_mut().zip(&step.dx) {
                *x += ap * dx;
            }
            for (t, side) in [&mut self.xl, &mut self.xu, &mut self.rl, &mut self.ru]
                .into_iter()
                .enumerate()
            {
                for k in 0..side.active.len() {
                    if side.active[k] {
                        side.v[k] += ap * step.dv[t][k];
                        side.lam[k] += ad * step.dlam[t][k];
                    }
                }
            }
        }
    }

    /// Rounds the current iterate to a feasible point and bounds its gap.
    fn certify(&self, iterations: usize) -> Candidate {
        let lp = self.lp;
        let mut x: Vec<f64> = self
            .x
            .iter()
            .enumerate()
            .map(|(j, &v)| v.clamp(lp.var_lower[j], lp.var_upper[j]))
            .collect();
        let origin_ok = (0..self.n).all(|j| lp.var_lower[j] <= 0.0 && 0.0 <= lp.var_upper[j])
            && (0..self.m).all(|i| lp.row_lower[i] <= 0.0 && 0.0 <= lp.row_upper[i]);
        if origin_ok && lp.max_violation(&x) > 0.5 * self.opts.feasibility_tol {
            let act = lp.row_activities(&x);
            let mut keep = 1.0_f64;
            for (i, &a) in act.iter().enumerate() {
                if a > lp.row_upper[i] {
                    keep = keep.min(lp.row_upper[i] / a);
                } else if a < lp.row_lower[i] {
                    keep = keep.min(lp.row_lower[i] / a);
                }
            }
            if keep < 1.0 {
                let keep = keep * (1.0 - 4.0 * f64::EPSILON);
                x.iter_mut().for_each(|v| *v *= keep);
            }
        }
        let y: Vec<f64> = (0..self.m)
            .map(|i| (self.ru.lam[i] - self.rl.lam[i]) / self.cost_scale)
            .collect();
        let snapped = snap_to_bounds(lp, &x, &y);
        if lp.max_violation(&snapped) <= lp.max_violation(&x).max(0.5 * self.opts.feasibility_tol)
            && lp.objective_value(&snapped) >= lp.objective_value(&x)
        {
            x = snapped;
        }
        let objective = lp.objective_value(&x);
        let primal_residual = lp.max_violation(&x);
        let bound = lp.dual_bound(&y);
        Candidate {
            x,
            y,
            objective,
            bound,
            relative_gap: gap(bound, objective),
            primal_residual,
            iterations,
        }
    }
}

/// Moves variables with a decisive reduced cost onto their favourable bound.
fn snap_to_bounds(lp: &LinearProgram, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut d = lp.objective.clone();
    for (i, &yi) in y.iter().enumerate() {
        if yi != 0.0 {
            let (cols, vals) = lp.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                d[c] -= yi * v;
            }
        }
    }
    let scale = lp.objective.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    x.iter()
        .zip(&d)
        .enumerate()
        .map(|(j, (&xj, &dj))| {
            let (lo, hi) = (lp.var_lower[j], lp.var_upper[j]);
            let near = |b: f64| b.is_finite() && (xj - b).abs() <= 1e-6 * (1.0 + b.abs());
            if dj > 1e-9 * scale && near(hi) {
                hi
            } else if dj < -1e-9 * scale && near(lo) {
                lo
            } else {
                xj
            }
        })
        .collect()
}

fn gap(bound: f64, objective: f64) -> f64 {
    ((bound - objective) / objective.abs().max(1.0)).max(0.0)
}

/// A feasible point and a dual vector, possibly from different iterates.
struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    objective: f64,
    bound: f64,
    primal_residual: f64,
    relative_gap: f64,
    iterations: usize,
}

impl Candidate {
    fn merge(mut self, other: Candidate) -> Candidate {
        if other.objective > self.objective {
            self.x = other.x;
            self.objective = other.objective;
            self.primal_residual = other.primal_residual;
        }
        if other.bound < self.bound {
            self.y = other.y;
            self.bound = other.bound;
        }
        self.iterations = other.iterations;
        self.relative_gap = gap(self.bound, self.objective);
        self
    }

    fn into_result(self, opts: &BarrierOptions) -> Result<LpSolution> {
        debug!(
            "barrier: {} iterations, objective {}, residual {:e}, gap {:e}",
            self.iterations, self.objective, self.primal_residual, self.relative_gap
        );
        if self.primal_residual > opts.feasibility_tol {
            return Err(Error::Solver(format!(
                "primal residual {:e} exceeds {:e}",
                self.primal_residual, opts.feasibility_tol
            )));
        }
        if self.relative_gap > opts.optimality_tol {
            return Err(Error::Solver(format!(
                "relative duality gap {:e} exceeds {:e}",
                self.relative_gap, opts.optimality_tol
            )));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: self.objective,
            x: self.x,
            row_duals: self.y,
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            relative_gap: self.relative_gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::SimplexSolver;

    #[test]
    fn matches_simplex_on_chain() {
        let n = 15;
        let mut lp = LinearProgram::new(n);
        for j in 0..n {
            lp.set_objective(j, if j % 4 == 0 { 1.0 } else { -0.6 });
            lp.set_bounds(j, -1.0, 1.0);
        }
        for j in 0..n - 1 {
            lp.add_row(&[(j, 1.0), (j + 1, -1.0)], -0.25, 0.25);
        }
        let b = BarrierSolver::default().solve(&lp).unwrap();
        let s = SimplexSolver::default().solve(&lp).unwrap();
        assert!((b.objective - s.objective).abs() < 1e-8, "{} {}", b.objective, s.objective);
        assert!(b.primal_residual <= 1e-9);
    }

    #[test]
    fn box_only() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(0, 2.0);
        lp.set_objective(1, -1.0);
        lp.set_bounds(0, -1.0, 1.0);
        lp.set_bounds(1, -3.0, 1.0);
        let b = BarrierSolver::default().solve(&lp).unwrap();
        assert!((b.objective - 5.0).abs() < 1e-8);
    }
}

