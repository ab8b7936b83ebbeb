use std::collections::BTreeSet;

use proptest::prelude::*;
use steinbench_core::metrics::wasserstein_1d;
use steinbench_core::operators::{apply_operator, drift_constant, drift_general};
use steinbench_core::spanner::{build_greedy_spanner, build_sorted_1d_spanner, verify_spanner};
use steinbench_core::targets::GaussianMixture;
use steinbench_core::{spanner_stein_discrepancy, DiffusionSpec, TargetModel, WeightMode, WeightedSample};

fn distinct(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = BTreeSet::new();
    rows.into_iter()
        .filter(|r| seen.insert(r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
        .collect()
}

fn point_set(max_n: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_d).prop_flat_map(move |d| {
        prop::collection::vec(prop::collection::vec(-10.0..10.0_f64, d), 2..=max_n).prop_map(distinct)
    })
}

fn weighted(max_n: usize) -> impl Strategy<Value = WeightedSample> {
    point_set(max_n, 1).prop_flat_map(|rows| {
        let n = rows.len();
        prop::collection::vec(0.01..1.0_f64, n).prop_map(move |raw| {
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let rest: f64 = w[1..].iter().sum();
            w[0] = 1.0 - rest;
            WeightedSample::new(rows.clone(), w).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(rows in point_set(20, 4), column in any::<bool>()) {
        let s = WeightedSample::uniform(rows).unwrap();
        let mode = if column { WeightMode::Column } else { WeightMode::Uniform };
        let back = WeightedSample::from_csv_str(&s.to_csv(mode), mode).unwrap();
        prop_assert_eq!(back.flat_points(), s.flat_points());
        prop_assert_eq!(back.weights(), s.weights());
    }

    #[test]
    fn malformed_samples_rejected(rows in point_set(10, 3), bad in 0usize..10, kind in 0u8..4) {
        prop_assume!(rows.len() >= 2);
        let n = rows.len();
        let bad = bad % n;
        let mut rows = rows;
        let mut w = vec![1.0 / n as f64; n];
        match kind {
            0 => rows[bad][0] = f64::NAN,
            1 => {
                w[bad] = -w[bad];
            }
            2 => {
                let other = (bad + 1) % n;
                rows[bad] = rows[other].clone();
            }
            _ => rows[bad].push(1.0),
        }
        prop_assert!(WeightedSample::new(rows.clone(), w).is_err());
        if kind != 1 {
            prop_assert!(WeightedSample::uniform(rows).is_err());
        }
    }

    #[test]
    fn greedy_spanner_has_its_stretch(rows in point_set(60, 5), t in prop::sample::select(vec![1.5, 2.0, 4.0])) {
        let s = WeightedSample::uniform(rows).unwrap();
        let g = build_greedy_spanner(&s, t).unwrap();
        prop_assert!(verify_spanner(&g, &s, t).is_ok());
        for e in g.edges() {
            prop_assert!((e.w - steinbench_core::spanner::l1_distance(s.point(e.i), s.point(e.l))).abs() <= 1e-12);
        }
    }

    #[test]
    fn greedy_spanner_ignores_input_order(rows in point_set(30, 3), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let a = build_greedy_spanner(&WeightedSample::uniform(rows).unwrap(), 2.0).unwrap();
        let b = build_greedy_spanner(&WeightedSample::uniform(shuffled).unwrap(), 2.0).unwrap();
        let key = |i: usize, l: usize| (i.min(l), i.max(l));
        let ea: BTreeSet<_> = a.edges().iter().map(|e| key(e.i, e.l)).collect();
        let eb: BTreeSet<_> = b.edges().iter().map(|e| key(perm[e.i], perm[e.l])).collect();
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn sorted_spanner_is_a_path(rows in point_set(100, 1)) {
        let s = WeightedSample::uniform(rows).unwrap();
        let g = build_sorted_1d_spanner(&s).unwrap();
        prop_assert_eq!(g.edges().len(), s.len() - 1);
        prop_assert!(verify_spanner(&g, &s, 1.0).is_ok());
    }

    #[test]
    fn operator_is_linear(rows in point_set(8, 3), alpha in -3.0..3.0_f64, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let s = WeightedSample::uniform(rows).unwrap();
        let (n, d) = (s.len(), s.dim());
        let target = GaussianMixture::symmetric_pair(2.0);
        let target: Box<dyn TargetModel> = if d == 1 { Box::new(target) } else { Box::new(GaussianMixture::standard_normal(d)) };
        let op = drift_general(&DiffusionSpec::langevin(d), target.as_ref(), s.flat_points()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let (g1, j1, g2, j2) = (draw(n * d), draw(n * d * d), draw(n * d), draw(n * d * d));
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| alpha * x + y).collect::<Vec<_>>();
        let lhs = apply_operator(&op, &mix(&g1, &g2), &mix(&j1, &j2)).unwrap();
        let h1 = apply_operator(&op, &g1, &j1).unwrap();
        let h2 = apply_operator(&op, &g2, &j2).unwrap();
        for (l, (a, b)) in lhs.iter().zip(h1.iter().zip(&h2)) {
            prop_assert!((l - (alpha * a + b)).abs() <= 1e-12 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn constant_spec_drift_agrees(rows in point_set(10, 3)) {
        let s = WeightedSample::uniform(rows).unwrap();
        let d = s.dim();
        let spec = DiffusionSpec::langevin(d);
        let t = GaussianMixture::standard_normal(d);
        let a = drift_general(&spec, &t, s.flat_points()).unwrap();
        let b = drift_constant(&spec.constant_m().unwrap(), &t, s.flat_points()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mixture_score_is_translation_equivariant(x in prop::collection::vec(-5.0..5.0_f64, 2), v in prop::collection::vec(-5.0..5.0_f64, 2)) {
        let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let means = vec![vec![-1.0, 0.5], vec![2.0, -1.0]];
        let p = GaussianMixture::new(vec![0.3, 0.7], means.clone(), cov.clone()).unwrap();
        let shifted: Vec<Vec<f64>> = means.iter().map(|m| vec![m[0] + v[0], m[1] + v[1]]).collect();
        let q = GaussianMixture::new(vec![0.3, 0.7], shifted, cov).unwrap();
        let a = p.score(&x);
        let b = q.score(&[x[0] + v[0], x[1] + v[1]]);
        for (u, w) in a.iter().zip(&b) {
            prop_assert!((u - w).abs() <= 1e-9 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn wasserstein_is_a_metric(a in weighted(12), b in weighted(12), c in weighted(12)) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        prop_assert_eq!(ab, wasserstein_1d(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        let ac = wasserstein_1d(&a, &c).unwrap();
        let cb = wasserstein_1d(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn discrepancy_is_nonnegative(rows in point_set(15, 2)) {
        let s = WeightedSample::uniform(rows).unwrap();
        let d = s.dim();
        let run = spanner_stein_discrepancy(&s, &GaussianMixture::standard_normal(d), &DiffusionSpec::langevin(d), &Default::default()).unwrap();
        prop_assert!(run.witness.value > 0.0);
        prop_assert!(run.witness.coord_values.iter().all(|v| *v >= -1e-12));
    }
}
