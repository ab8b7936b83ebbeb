//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are factored left-looking (Gilbert–Peierls): each column is
//! reduced by a sparse triangular solve against the already-built `L`, and
//! the pivot is chosen among the remaining rows by threshold partial
//! pivoting with a preference for sparse rows. Basis changes between
//! refactorizations are appended as eta columns.

/// Relative threshold for accepting a pivot against the column maximum.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Entries below this magnitude are dropped from factors and etas.
const DROP_TOL: f64 = 1e-14;

/// A sparse column given as parallel index/value slices.
#[derive(Clone, Copy)]
pub(crate) struct SparseCol<'a> {
    pub(crate) rows: &'a [usize],
    pub(crate) vals: &'a [f64],
}

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub(crate) positions: Vec<usize>,
    /// Rows left without a pivot; as many as `positions`.
    pub(crate) free_rows: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

pub(crate) struct BasisFactor {
    m: usize,
    /// `row_of_step[k]`: original row pivoted at step `k`.
    row_of_step: Vec<usize>,
    /// `step_of_row[r]`: step at which row `r` was pivoted.
    step_of_row: Vec<usize>,
    /// `pos_of_step[k]`: basis position of the column factored at step `k`.
    pos_of_step: Vec<usize>,
    l_start: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_start: Vec<usize>,
    /// Step indices `k' < k` of the off-diagonal entries of `U` column `k`.
    u_steps: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
    work: Vec<f64>,
}

impl BasisFactor {
    /// Factors the `m × m` matrix whose column at basis position `p` is
    /// `cols[p]`.
    pub(crate) fn factor(m: usize, cols: &[SparseCol<'_>]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &r in c.rows {
                row_count[r] += 1;
            }
        }
        // Sparse columns first; singleton columns then pivot trivially.
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].rows.len(), p));

        const UNSET: usize = usize::MAX;
        let mut f = BasisFactor {
            m,
            row_of_step: Vec::with_capacity(m),
            step_of_row: vec![UNSET; m],
            pos_of_step: Vec::with_capacity(m),
            l_start: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_start: vec![0],
            u_steps: Vec::new(),
            u_vals: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            eta_nnz: 0,
            work: vec![0.0; m],
        };

        let mut x = vec![0.0; m];
        let mut in_pattern = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut topo: Vec<usize> = Vec::new();
        let mut visited = vec![false; m];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut failed = Vec::new();

        for &pos in &order {
            let col = cols[pos];
            // Symbolic: steps reachable from the column's pivoted rows.
            topo.clear();
            for &r in col.rows {
                let s = f.step_of_row[r];
                if s != UNSET && !visited[s] {
                    visited[s] = true;
                    stack.push((s, f.l_start[s]));
                    while let Some(&mut (k, ref mut next)) = stack.last_mut() {
                        let end = f.l_start[k + 1];
                        let mut pushed = false;
                        while *next < end {
                            let row = f.l_rows[*next];
                            *next += 1;
                            let s2 = f.step_of_row[row];
                            if s2 != UNSET && !visited[s2] {
                                visited[s2] = true;
                                stack.push((s2, f.l_start[s2]));
                                pushed = true;
                                break;
                            }
                        }
                        if !pushed {
                            topo.push(k);
                            stack.pop();
                        }
                    }
                }
            }
            // Numeric: scatter and eliminate in topological order.
            pattern.clear();
            for (&r, &v) in col.rows.iter().zip(col.vals) {
                if !in_pattern[r] {
                    in_pattern[r] = true;
                    pattern.push(r);
                }
                x[r] += v;
            }
            for &k in topo.iter().rev() {
                visited[k] = false;
                let v = x[f.row_of_step[k]];
                if v == 0.0 {
                    continue;
                }
                for idx in f.l_start[k]..f.l_start[k + 1] {
                    let r = f.l_rows[idx];
                    if !in_pattern[r] {
                        in_pattern[r] = true;
                        pattern.push(r);
                    }
                    x[r] -= f.l_vals[idx] * v;
                }
            }
            // Pivot among unpivoted rows.
            let max_abs = pattern
                .iter()
                .filter(|&&r| f.step_of_row[r] == UNSET)
                .map(|&r| x[r].abs())
                .fold(0.0, f64::max);
            let pivot_row = if max_abs > DROP_TOL {
                pattern
                    .iter()
                    .copied()
                    .filter(|&r| f.step_of_row[r] == UNSET && x[r].abs() >= PIVOT_THRESHOLD * max_abs)
                    .min_by(|&a, &b| {
                        row_count[a]
                            .cmp(&row_count[b])
                            .then(x[b].abs().total_cmp(&x[a].abs()))
                            .then(a.cmp(&b))
                    })
            } else {
                None
            };
            let Some(p) = pivot_row else {
                failed.push(pos);
                for &r in &pattern {
                    x[r] = 0.0;
                    in_pattern[r] = false;
                }
                continue;
            };
            let k = f.row_of_step.len();
            let piv = x[p];
            for &r in &pattern {
                let v = x[r];
                let s = f.step_of_row[r];
                if r == p || v.abs() <= DROP_TOL {
                    // skip
                } else if s != UNSET {
                    f.u_steps.push(s);
                    f.u_vals.push(v);
                } else {
                    f.l_rows.push(r);
                    f.l_vals.push(v / piv);
                }
                x[r] = 0.0;
                in_pattern[r] = false;
            }
            f.u_diag.push(piv);
            f.u_start.push(f.u_steps.len());
            f.l_start.push(f.l_rows.len());
            f.row_of_step.push(p);
            f.step_of_row[p] = k;
            f.pos_of_step.push(pos);
        }
        if failed.is_empty() {
            Ok(f)
        } else {
            let free_rows = (0..m).filter(|&r| f.step_of_row[r] == UNSET).collect();
            Err(Singular {
                positions: failed,
                free_rows,
            })
        }
    }

    pub(crate) fn num_etas(&self) -> usize {
        self.etas.len()
    }

    pub(crate) fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub(crate) fn factor_nnz(&self) -> usize {
        self.l_rows.len() + self.u_steps.len() + self.m
    }

    /// Solves `B x = b` in place. On entry `rhs` is indexed by row, on exit
    /// by basis position.
    pub(crate) fn ftran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        // L z = b, z stored at the pivot rows
        for k in 0..m {
            let v = rhs[self.row_of_step[k]];
            if v != 0.0 {
                for idx in self.l_start[k]..self.l_start[k + 1] {
                    rhs[self.l_rows[idx]] -= self.l_vals[idx] * v;
                }
            }
        }
        // U w = z, in step order
        let z = &mut self.work;
        for k in 0..m {
            z[k] = rhs[self.row_of_step[k]];
        }
        for k in (0..m).rev() {
            let w = z[k] / self.u_diag[k];
            z[k] = w;
            if w != 0.0 {
                for idx in self.u_start[k]..self.u_start[k + 1] {
                    z[self.u_steps[idx]] -= self.u_vals[idx] * w;
                }
            }
        }
        for k in 0..m {
            rhs[self.pos_of_step[k]] = z[k];
        }
        for eta in &self.etas {
            let wr = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = wr;
            if wr != 0.0 {
                for &(p, a) in &eta.entries {
                    rhs[p] -= a * wr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c` in place. On entry `rhs` is indexed by basis
    /// position, on exit by row.
    pub(crate) fn btran(&mut self, rhs: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.entries.iter().map(|&(p, a)| a * rhs[p]).sum();
            rhs[eta.pos] = (rhs[eta.pos] - s) / eta.pivot;
        }
        // Uᵀ v = c
        let v = &mut self.work;
        for k in 0..m {
            let mut acc = rhs[self.pos_of_step[k]];
            for idx in self.u_start[k]..self.u_start[k + 1] {
                acc -= self.u_vals[idx] * v[self.u_steps[idx]];
            }
            v[k] = acc / self.u_diag[k];
        }
        // Lᵀ y = v
        for k in (0..m).rev() {
            let mut acc = v[k];
            for idx in self.l_start[k]..self.l_start[k + 1] {
                acc -= self.l_vals[idx] * rhs[self.l_rows[idx]];
            }
            rhs[self.row_of_step[k]] = acc;
        }
    }

    /// Records the replacement of the column at position `pos` by a column
    /// whose FTRAN image is `alpha` (indexed by basis position).
    pub(crate) fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(p, a)| p != pos && a.abs() > DROP_TOL)
            .map(|(p, &a)| (p, a))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
