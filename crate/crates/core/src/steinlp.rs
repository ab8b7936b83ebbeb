//! The ℓ1 graph Stein discrepancy as `d` independent coordinate linear
//! programs.
//!
//! For coordinate `j` the program maximizes
//! `Σ_i q_i (2 b_j(x_i) ψ_i + Σ_k m_{jk}(x_i) Ψ_{ki})` over the values
//! `ψ_i = g_j(x_i)` and gradients `Ψ_{ki} = ∂_k g_j(x_i)` subject to
//!
//! * `|ψ_i| ≤ c1`, `|Ψ_{ki}| ≤ c2` at every point,
//! * for every graph edge `(i, l)` with `w = ‖x_i - x_l‖₁`:
//!   `|ψ_i - ψ_l| ≤ c2 w`, `|Ψ_{ki} - Ψ_{kl}| ≤ c3 w` for each `k`, and the
//!   two Taylor remainders `|ψ_i - ψ_l - ⟨Ψ_{·i}, x_i - x_l⟩| ≤ c3 w²/2`,
//!   `|ψ_i - ψ_l - ⟨Ψ_{·l}, x_i - x_l⟩| ≤ c3 w²/2`.
//!
//! Each absolute-value constraint is a single two-sided row.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, LpSolver, AutoSolver};
use crate::operators::{apply_operator, drift_general, OperatorData};
use crate::sample::WeightedSample;
use crate::spanner::{build_greedy_spanner, build_sorted_1d_spanner, SpannerGraph};
use crate::target::TargetModel;

/// Tolerance of the independent witness re-check.
pub const WITNESS_TOL: f64 = 1e-8;

/// Bounds `(c1, c2, c3)` of a non-uniform Stein set: values, gradients and
/// gradient Lipschitz constant respectively.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinScales {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for SteinScales {
    fn default() -> Self {
        Self::UNIFORM
    }
}

impl SteinScales {
    pub const UNIFORM: Self = Self {
        c1: 1.0,
        c2: 1.0,
        c3: 1.0,
    };

    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let s = Self { c1, c2, c3 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "scale {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.c1.min(self.c2).min(self.c3)
    }

    pub fn max(&self) -> f64 {
        self.c1.max(self.c2).max(self.c3)
    }
}

/// The `j`-th coordinate program.
#[derive(Clone, Debug)]
pub struct CoordinateLp {
    coordinate: usize,
    n: usize,
    d: usize,
    num_edges: usize,
    scales: SteinScales,
    lp: LinearProgram,
}

impl CoordinateLp {
    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn scales(&self) -> SteinScales {
        self.scales
    }

    /// `n (d + 1)`.
    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }

    /// Number of one-sided inequalities the edge rows stand for:
    /// `(2 + 2d + 4)` per edge.
    pub fn num_edge_inequalities(&self) -> usize {
        2 * self.lp.num_rows()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Index of `ψ_i`.
    pub fn psi_index(&self, i: usize) -> usize {
        i
    }

    /// Index of `Ψ_{ki}`.
    pub fn grad_index(&self, i: usize, k: usize) -> usize {
        self.n + i * self.d + k
    }
}

/// Builds the `j`-th coordinate program with the sample's own weights.
pub fn build_coordinate_lp(
    j: usize,
    sample: &WeightedSample,
    op: &OperatorData,
    graph: &SpannerGraph,
    scales: SteinScales,
) -> Result<CoordinateLp> {
    build_coordinate_lp_weighted(j, sample, sample.weights(), op, graph, scales)
}

/// As [`build_coordinate_lp`] with explicit objective weights, which need
/// not be normalized.
pub fn build_coordinate_lp_weighted(
    j: usize,
    sample: &WeightedSample,
    weights: &[f64],
    op: &OperatorData,
    graph: &SpannerGraph,
    scales: SteinScales,
) -> Result<CoordinateLp> {
    scales.validate()?;
    let (n, d) = (sample.len(), sample.dim());
    if j >= d {
        return Err(Error::InvalidParameter(format!(
            "coordinate {j} outside 0..{d}"
        )));
    }
    if op.len() != n || op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            got: op.len() * op.dim(),
        });
    }
    if graph.num_vertices() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: graph.num_vertices(),
        });
    }
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }

    let mut lp = LinearProgram::new(n * (d + 1));
    let mut out = CoordinateLp {
        coordinate: j,
        n,
        d,
        num_edges: graph.edges().len(),
        scales,
        lp: LinearProgram::default(),
    };
    for i in 0..n {
        let q = weights[i];
        let psi = out.psi_index(i);
        lp.set_objective(psi, q * 2.0 * op.b(i)[j]);
        lp.set_bounds(psi, -scales.c1, scales.c1);
        let m_row = op.m_row(i, j);
        for k in 0..d {
            let g = out.grad_index(i, k);
            lp.set_objective(g, q * m_row[k]);
            lp.set_bounds(g, -scales.c2, scales.c2);
        }
    }

    let mut entries = Vec::with_capacity(2 + d);
    for e in graph.edges() {
        let (i, l) = (e.i, e.l);
        let (xi, xl) = (sample.point(i), sample.point(l));
        let w: f64 = xi.iter().zip(xl).map(|(a, b)| (a - b).abs()).sum();
        if !(w > 0.0) {
            return Err(Error::InvalidSample(format!(
                "edge ({i}, {l}) joins coincident points"
            )));
        }
        let (pi, pl) = (out.psi_index(i), out.psi_index(l));

        let lip = scales.c2 * w;
        lp.add_row(&[(pi, 1.0), (pl, -1.0)], -lip, lip);

        let glip = scales.c3 * w;
        for k in 0..d {
            lp.add_row(
                &[(out.grad_index(i, k), 1.0), (out.grad_index(l, k), -1.0)],
                -glip,
                glip,
            );
        }

        let rem = scales.c3 * 0.5 * w * w;
        for anchor in [i, l] {
            entries.clear();
            entries.push((pi, 1.0));
            entries.push((pl, -1.0));
            for k in 0..d {
                entries.push((out.grad_index(anchor, k), -(xi[k] - xl[k])));
            }
            lp.add_row(&entries, -rem, rem);
        }
    }
    out.lp = lp;
    Ok(out)
}

/// Optimal value and witness of one coordinate program.
#[derive(Clone, Debug)]
pub struct CoordinateSolution {
    pub value: f64,
    /// `ψ_i`, length `n`.
    pub psi: Vec<f64>,
    /// `Ψ_{ki}` as `d` rows of length `n`.
    pub grad: Vec<Vec<f64>>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub relative_gap: f64,
}

/// Solves one coordinate program. The value is never negative since
/// `g ≡ 0` is feasible.
pub fn solve_lp(lp: &CoordinateLp, solver: &dyn LpSolver) -> Result<CoordinateSolution> {
    let sol: LpSolution = solver.solve(&lp.lp)?;
    let psi = (0..lp.n).map(|i| sol.x[lp.psi_index(i)]).collect();
    let grad = (0..lp.d)
        .map(|k| (0..lp.n).map(|i| sol.x[lp.grad_index(i, k)]).collect())
        .collect();
    Ok(CoordinateSolution {
        value: sol.objective,
        psi,
        grad,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        relative_gap: sol.relative_gap,
    })
}

/// The discrepancy value with its optimal Stein function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinWitness {
    pub value: f64,
    /// `τ_j`, one per coordinate.
    pub coord_values: Vec<f64>,
    /// `psi[j][i] = g_j(x_i)`.
    pub psi: Vec<Vec<f64>>,
    /// `Psi[j][k][i] = ∂_k g_j(x_i)`.
    #[serde(rename = "Psi")]
    pub psi_grad: Vec<Vec<Vec<f64>>>,
    /// `h*(x_i) = (T_P g*)(x_i)`.
    pub h_star: Vec<f64>,
}

impl SteinWitness {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("witness serializes")
    }

    /// `g*` values in the `n × d` layout used by [`apply_operator`].
    pub fn g_vals(&self) -> Vec<f64> {
        let d = self.psi.len();
        let n = self.h_star.len();
        let mut g = vec![0.0; n * d];
        for (j, row) in self.psi.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                g[i * d + j] = *v;
            }
        }
        g
    }

    /// `∇g*` values in the `n × d × d` layout used by [`apply_operator`].
    pub fn grad_vals(&self) -> Vec<f64> {
        let d = self.psi.len();
        let n = self.h_star.len();
        let mut g = vec![0.0; n * d * d];
        for (j, rows) in self.psi_grad.iter().enumerate() {
            for (k, row) in rows.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    g[(i * d + j) * d + k] = *v;
                }
            }
        }
        g
    }
}

/// Solve statistics reported alongside a witness.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveStats {
    pub num_edges: usize,
    pub iterations: Vec<usize>,
    pub max_primal_residual: f64,
    pub max_relative_gap: f64,
}

/// How the graph over the sample is chosen.
#[derive(Clone, Debug, Default)]
pub enum GraphChoice {
    /// Sorted adjacency in 1-D, greedy spanner otherwise.
    #[default]
    Auto,
    Greedy,
    Complete,
    Given(SpannerGraph),
}

#[derive(Clone)]
pub struct DiscrepancyOptions {
    pub stretch: f64,
    pub scales: SteinScales,
    pub graph: GraphChoice,
    pub solver: Arc<dyn LpSolver>,
    /// Solve coordinates on the current rayon pool.
    pub parallel: bool,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        Self {
            stretch: 2.0,
            scales: SteinScales::UNIFORM,
            graph: GraphChoice::Auto,
            solver: Arc::new(AutoSolver::default()),
            parallel: true,
        }
    }
}

impl std::fmt::Debug for DiscrepancyOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscrepancyOptions")
            .field("stretch", &self.stretch)
            .field("scales", &self.scales)
            .field("graph", &self.graph)
            .field("parallel", &self.parallel)
            .finish()
    }
}

/// Everything produced by one discrepancy computation.
#[derive(Clone, Debug)]
pub struct DiscrepancyRun {
    pub witness: SteinWitness,
    pub graph: SpannerGraph,
    pub operator: OperatorData,
    pub stats: SolveStats,
}

/// Builds the graph requested by `choice`.
pub fn build_graph(sample: &WeightedSample, choice: &GraphChoice, stretch: f64) -> Result<SpannerGraph> {
    if !(stretch >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stretch must be >= 1, got {stretch}"
        )));
    }
    match choice {
        GraphChoice::Auto if sample.dim() == 1 => build_sorted_1d_spanner(sample),
        GraphChoice::Auto | GraphChoice::Greedy => build_greedy_spanner(sample, stretch),
        GraphChoice::Complete => Ok(SpannerGraph::complete(sample)),
        GraphChoice::Given(g) => {
            if g.num_vertices() != sample.len() {
                return Err(Error::DimensionMismatch {
                    expected: sample.len(),
                    got: g.num_vertices(),
                });
            }
            Ok(g.clone())
        }
    }
}

/// Operator coefficients at the sample points, after checking the
/// diffusion at those points and the origin.
pub fn operator_for_sample(
    sample: &WeightedSample,
    target: &dyn TargetModel,
    spec: &DiffusionSpec,
) -> Result<OperatorData> {
    let d = sample.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.dim(),
        });
    }
    if spec.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.dim(),
        });
    }
    let origin = vec![0.0; d];
    let mut probes: Vec<&[f64]> = sample.points().collect();
    probes.push(&origin);
    spec.check_at(&probes)?;
    drift_general(spec, target, sample.flat_points())
}

/// The spanner diffusion Stein discrepancy `Σ_j τ_j` with its witness.
pub fn spanner_stein_discrepancy(
    sample: &WeightedSample,
    target: &dyn TargetModel,
    spec: &DiffusionSpec,
    opts: &DiscrepancyOptions,
) -> Result<DiscrepancyRun> {
    opts.scales.validate()?;
    let operator = operator_for_sample(sample, target, spec)?;
    let graph = build_graph(sample, &opts.graph, opts.stretch)?;
    discrepancy_on_graph(sample, sample.weights(), &operator, graph, opts)
}

/// Solves the coordinate programs on a fixed graph and operator. `weights`
/// enter only the objective.
pub fn discrepancy_on_graph(
    sample: &WeightedSample,
    weights: &[f64],
    operator: &OperatorData,
    graph: SpannerGraph,
    opts: &DiscrepancyOptions,
) -> Result<DiscrepancyRun> {
    let d = sample.dim();
    let solve_one = |j: usize| -> Result<CoordinateSolution> {
        let lp = build_coordinate_lp_weighted(j, sample, weights, operator, &graph, opts.scales)?;
        solve_lp(&lp, opts.solver.as_ref())
    };
    let solutions: Vec<CoordinateSolution> = if opts.parallel {
        (0..d).into_par_iter().map(solve_one).collect::<Result<_>>()?
    } else {
        (0..d).map(solve_one).collect::<Result<_>>()?
    };

    let coord_values: Vec<f64> = solutions.iter().map(|s| s.value).collect();
    let mut witness = SteinWitness {
        value: coord_values.iter().sum(),
        coord_values,
        psi: solutions.iter().map(|s| s.psi.clone()).collect(),
        psi_grad: solutions.iter().map(|s| s.grad.clone()).collect(),
        h_star: Vec::new(),
    };
    witness.h_star = vec![0.0; sample.len()];
    witness.h_star = apply_operator(operator, &witness.g_vals(), &witness.grad_vals())?;
    let stats = SolveStats {
        num_edges: graph.edges().len(),
        iterations: solutions.iter().map(|s| s.iterations).collect(),
        max_primal_residual: solutions.iter().map(|s| s.primal_residual).fold(0.0, f64::max),
        max_relative_gap: solutions.iter().map(|s| s.relative_gap).fold(0.0, f64::max),
    };
    Ok(DiscrepancyRun {
        witness,
        graph,
        operator: operator.clone(),
        stats,
    })
}

/// Result of re-checking a witness against the graph Stein set directly.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WitnessCheck {
    /// Largest violation of any box, Lipschitz or Taylor constraint.
    pub max_violation: f64,
    /// `|Σ_j τ_j - value|`.
    pub sum_error: f64,
    /// `|Σ_i q_i h*(x_i) - value|`.
    pub h_star_error: f64,
}

impl WitnessCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.sum_error <= tol && self.h_star_error <= tol
    }
}

/// Evaluates every graph Stein set constraint on the witness values without
/// going through the linear program.
pub fn check_witness(
    sample: &WeightedSample,
    graph: &SpannerGraph,
    witness: &SteinWitness,
    scales: SteinScales,
) -> WitnessCheck {
    let d = sample.dim();
    let mut worst = 0.0_f64;
    let mut note = |excess: f64| worst = worst.max(excess);
    for j in 0..d {
        let psi = &witness.psi[j];
        let grad = &witness.psi_grad[j];
        for i in 0..sample.len() {
            note(psi[i].abs() - scales.c1);
            for row in grad {
                note(row[i].abs() - scales.c2);
            }
        }
        for e in graph.edges() {
            let (i, l) = (e.i, e.l);
            let (xi, xl) = (sample.point(i), sample.point(l));
            let w: f64 = xi.iter().zip(xl).map(|(a, b)| (a - b).abs()).sum();
            let diff = psi[i] - psi[l];
            note(diff.abs() - scales.c2 * w);
            for row in grad {
                note((row[i] - row[l]).abs() - scales.c3 * w);
            }
            for anchor in [i, l] {
                let lin: f64 = (0..d).map(|k| grad[k][anchor] * (xi[k] - xl[k])).sum();
                note((diff - lin).abs() - scales.c3 * 0.5 * w * w);
            }
        }
    }
    let total: f64 = witness.coord_values.iter().sum();
    let weighted: f64 = witness
        .h_star
        .iter()
        .zip(sample.weights())
        .map(|(h, q)| h * q)
        .sum();
    WitnessCheck {
        max_violation: worst.max(0.0),
        sum_error: (total - witness.value).abs(),
        h_star_error: (weighted - witness.value).abs(),
    }
}

/// Outcome of comparing uniform and non-uniform Stein sets.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NonuniformReport {
    pub uniform: f64,
    pub scaled: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

/// Computes the discrepancy with uniform and with `scales` bounds on the
/// same graph and checks `min(c) S - 1e-6 ≤ S^c ≤ max(c) S + 1e-6`.
pub fn nonuniform_equivalence_check(
    sample: &WeightedSample,
    target: &dyn TargetModel,
    spec: &DiffusionSpec,
    scales: SteinScales,
    opts: &DiscrepancyOptions,
) -> Result<NonuniformReport> {
    scales.validate()?;
    let operator = operator_for_sample(sample, target, spec)?;
    let graph = build_graph(sample, &opts.graph, opts.stretch)?;
    let uniform_opts = DiscrepancyOptions {
        scales: SteinScales::UNIFORM,
        ..opts.clone()
    };
    let scaled_opts = DiscrepancyOptions {
        scales,
        ..opts.clone()
    };
    let s = discrepancy_on_graph(sample, sample.weights(), &operator, graph.clone(), &uniform_opts)?
        .witness
        .value;
    let sc = discrepancy_on_graph(sample, sample.weights(), &operator, graph, &scaled_opts)?
        .witness
        .value;
    let lower = scales.min() * s - 1e-6;
    let upper = scales.max() * s + 1e-6;
    Ok(NonuniformReport {
        uniform: s,
        scaled: sc,
        lower,
        upper,
        passed: lower <= sc && sc <= upper,
    })
}
