use nalgebra::{DMatrix, DVector};
use steinbench_core::lp::{BarrierSolver, LpSolver, SimplexSolver};
use steinbench_core::spanner::SpannerGraph;
use steinbench_core::steinlp::{
    build_coordinate_lp, build_graph, check_witness, discrepancy_on_graph, nonuniform_equivalence_check,
    operator_for_sample, solve_lp, GraphChoice, WITNESS_TOL,
};
use steinbench_core::targets::{gmm_sample, GaussianMixture};
use steinbench_core::{spanner_stein_discrepancy, DiffusionSpec, DiscrepancyOptions, SteinScales, WeightedSample};
use std::sync::Arc;

/// Maximum of `c·v` over `{v : G v ≤ h}` by enumerating every vertex.
fn brute_force_max(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> f64 {
    let nv = c.len();
    let m = g.len();
    let mut best = f64::NEG_INFINITY;
    let mut idx: Vec<usize> = (0..nv).collect();
    loop {
        let a = DMatrix::from_fn(nv, nv, |r, k| g[idx[r]][k]);
        let b = DVector::from_fn(nv, |r, _| h[idx[r]]);
        if let Some(v) = a.clone().lu().solve(&b) {
            if (&a * &v - &b).amax() < 1e-9 {
                let feasible = g
                    .iter()
                    .zip(h)
                    .all(|(row, hi)| row.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>() <= hi + 1e-9);
                if feasible {
                    best = best.max(c.iter().zip(v.iter()).map(|(x, y)| x * y).sum());
                }
            }
        }
        // next combination
        let mut k = nv;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < m - nv + k {
                idx[k] += 1;
                for t in k + 1..nv {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The coordinate-`j` program for `N(0, I)` Langevin (`b = -x/2`, `m = I`)
/// on the complete graph, written out as dense `G v ≤ h` from the
/// constraint family directly.
fn dense_program(points: &[Vec<f64>], q: &[f64], j: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = points.len();
    let d = points[0].len();
    let nv = n * (d + 1);
    let psi = |i: usize| i;
    let grad = |i: usize, k: usize| n + i * d + k;
    let mut c = vec![0.0; nv];
    for i in 0..n {
        c[psi(i)] = q[i] * 2.0 * (-points[i][j] / 2.0);
        c[grad(i, j)] = q[i];
    }
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut both = |row: Vec<f64>, bound: f64| {
        g.push(row.clone());
        h.push(bound);
        g.push(row.iter().map(|v| -v).collect());
        h.push(bound);
    };
    for v in 0..nv {
        let mut row = vec![0.0; nv];
        row[v] = 1.0;
        both(row, 1.0);
    }
    for i in 0..n {
        for l in i + 1..n {
            let diff: Vec<f64> = (0..d).map(|k| points[i][k] - points[l][k]).collect();
            let w: f64 = diff.iter().map(|v| v.abs()).sum();
            let mut row = vec![0.0; nv];
            row[psi(i)] = 1.0;
            row[psi(l)] = -1.0;
            both(row.clone(), w);
            for k in 0..d {
                let mut r = vec![0.0; nv];
                r[grad(i, k)] = 1.0;
                r[grad(l, k)] = -1.0;
                both(r, w);
            }
            for anchor in [i, l] {
                let mut r = row.clone();
                for k in 0..d {
                    r[grad(anchor, k)] -= diff[k];
                }
                both(r, 0.5 * w * w);
            }
        }
    }
    (c, g, h)
}

fn run_complete(points: &[Vec<f64>]) -> steinbench_core::steinlp::DiscrepancyRun {
    let sample = WeightedSample::uniform(points.to_vec()).unwrap();
    let d = sample.dim();
    let target = GaussianMixture::standard_normal(d);
    let opts = DiscrepancyOptions {
        graph: GraphChoice::Complete,
        ..Default::default()
    };
    spanner_stein_discrepancy(&sample, &target, &DiffusionSpec::langevin(d), &opts).unwrap()
}

#[test]
fn two_point_program_matches_vertex_enumeration() {
    let points = vec![vec![-1.0], vec![1.0]];
    let run = run_complete(&points);
    let (c, g, h) = dense_program(&points, &[0.5, 0.5], 0);
    let oracle = brute_force_max(&c, &g, &h);
    assert!((run.witness.value - oracle).abs() < 1e-9, "{} vs {oracle}", run.witness.value);
}

#[test]
fn two_dimensional_pair_matches_vertex_enumeration() {
    let points = vec![vec![0.3, -0.8], vec![-0.4, 0.5]];
    let run = run_complete(&points);
    for j in 0..2 {
        let (c, g, h) = dense_program(&points, &[0.5, 0.5], j);
        let oracle = brute_force_max(&c, &g, &h);
        assert!(
            (run.witness.coord_values[j] - oracle).abs() < 1e-9,
            "coordinate {j}: {} vs {oracle}",
            run.witness.coord_values[j]
        );
    }
}

#[test]
fn three_points_match_vertex_enumeration() {
    let points = vec![vec![-0.5], vec![0.25], vec![1.5]];
    let run = run_complete(&points);
    let q = [1.0 / 3.0; 3];
    let (c, g, h) = dense_program(&points, &q, 0);
    let oracle = brute_force_max(&c, &g, &h);
    assert!((run.witness.value - oracle).abs() < 1e-9, "{} vs {oracle}", run.witness.value);
}

#[test]
fn point_masses() {
    assert!((run_complete(&[vec![0.0]]).witness.value - 1.0).abs() < 1e-12);
    assert!((run_complete(&[vec![1.0]]).witness.value - 2.0).abs() < 1e-12);
    let two_d = run_complete(&[vec![0.0, 0.0]]);
    assert!((two_d.witness.value - 2.0).abs() < 1e-12);
    assert_eq!(two_d.witness.coord_values.len(), 2);
}

#[test]
fn complete_graph_never_exceeds_spanner() {
    let target = GaussianMixture::standard_normal(2);
    let spec = DiffusionSpec::langevin(2);
    for seed in 0..5 {
        let sample = gmm_sample(&GaussianMixture::gaussian(vec![0.5, 0.0], nalgebra::DMatrix::identity(2, 2)).unwrap(), 25, seed).unwrap();
        let op = operator_for_sample(&sample, &target, &spec).unwrap();
        let opts = DiscrepancyOptions::default();
        let spanner = build_graph(&sample, &GraphChoice::Greedy, 2.0).unwrap();
        let s_sp = discrepancy_on_graph(&sample, sample.weights(), &op, spanner, &opts).unwrap().witness.value;
        let s_c = discrepancy_on_graph(&sample, sample.weights(), &op, SpannerGraph::complete(&sample), &opts)
            .unwrap()
            .witness
            .value;
        assert!(s_c <= s_sp + 1e-9, "seed {seed}: complete {s_c} > spanner {s_sp}");
    }
}

#[test]
fn weights_scale_linearly() {
    let p = GaussianMixture::symmetric_pair(2.0);
    let sample = gmm_sample(&p, 30, 4).unwrap();
    let target = GaussianMixture::standard_normal(1);
    let op = operator_for_sample(&sample, &target, &DiffusionSpec::langevin(1)).unwrap();
    let graph = build_graph(&sample, &GraphChoice::Auto, 2.0).unwrap();
    let opts = DiscrepancyOptions::default();
    let base = discrepancy_on_graph(&sample, sample.weights(), &op, graph.clone(), &opts).unwrap();
    let scaled: Vec<f64> = sample.weights().iter().map(|w| 3.5 * w).collect();
    let s3 = discrepancy_on_graph(&sample, &scaled, &op, graph, &opts).unwrap();
    assert!((s3.witness.value - 3.5 * base.witness.value).abs() < 1e-8);
}

#[test]
fn witnesses_pass_independent_check() {
    let p = GaussianMixture::symmetric_pair(4.0);
    let target = p.clone();
    for (n, seed) in [(10, 1), (40, 2), (80, 3)] {
        let sample = gmm_sample(&p, n, seed).unwrap();
        let run = spanner_stein_discrepancy(&sample, &target, &DiffusionSpec::langevin(1), &Default::default()).unwrap();
        let check = check_witness(&sample, &run.graph, &run.witness, SteinScales::UNIFORM);
        assert!(check.passed(WITNESS_TOL), "{check:?}");
        assert!(run.witness.value >= 0.0);
    }
}

#[test]
fn scaled_sets_bracketed() {
    let p = GaussianMixture::standard_normal(2);
    let sample = gmm_sample(&GaussianMixture::gaussian(vec![1.0, -1.0], nalgebra::DMatrix::identity(2, 2)).unwrap(), 20, 9).unwrap();
    let spec = DiffusionSpec::langevin(2);
    let opts = DiscrepancyOptions::default();
    let same = nonuniform_equivalence_check(&sample, &p, &spec, SteinScales::UNIFORM, &opts).unwrap();
    assert_eq!(same.uniform, same.scaled);
    let double = nonuniform_equivalence_check(&sample, &p, &spec, SteinScales::new(2.0, 2.0, 2.0).unwrap(), &opts).unwrap();
    assert!((double.scaled - 2.0 * double.uniform).abs() < 1e-8);
    let mixed = nonuniform_equivalence_check(&sample, &p, &spec, SteinScales::new(0.5, 1.0, 3.0).unwrap(), &opts).unwrap();
    assert!(mixed.passed, "{mixed:?}");
}

#[test]
fn backends_agree_on_coordinate_programs() {
    let p = GaussianMixture::standard_normal(3);
    let sample = gmm_sample(&GaussianMixture::gaussian(vec![0.3, 0.0, -0.2], nalgebra::DMatrix::identity(3, 3)).unwrap(), 40, 11).unwrap();
    let op = operator_for_sample(&sample, &p, &DiffusionSpec::langevin(3)).unwrap();
    let graph = build_graph(&sample, &GraphChoice::Greedy, 2.0).unwrap();
    let solvers: Vec<Arc<dyn LpSolver>> = vec![
        Arc::new(SimplexSolver::primal()),
        Arc::new(SimplexSolver::dual()),
        Arc::new(BarrierSolver::default()),
    ];
    for j in 0..3 {
        let lp = build_coordinate_lp(j, &sample, &op, &graph, SteinScales::UNIFORM).unwrap();
        let values: Vec<f64> = solvers.iter().map(|s| solve_lp(&lp, s.as_ref()).unwrap().value).collect();
        for v in &values[1..] {
            assert!((v - values[0]).abs() <= 1e-7 * values[0].abs().max(1.0), "{values:?}");
        }
    }
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let p = GaussianMixture::standard_normal(3);
    let sample = gmm_sample(&GaussianMixture::gaussian(vec![0.5, 0.0, 0.0], nalgebra::DMatrix::identity(3, 3)).unwrap(), 30, 5).unwrap();
    let spec = DiffusionSpec::langevin(3);
    let par = spanner_stein_discrepancy(&sample, &p, &spec, &DiscrepancyOptions::default()).unwrap();
    let seq = spanner_stein_discrepancy(
        &sample,
        &p,
        &spec,
        &DiscrepancyOptions {
            parallel: false,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(par.witness, seq.witness);
}
