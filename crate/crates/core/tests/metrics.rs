use steinbench_core::metrics::{coupled_upper_bound, coupled_upper_bound_for, fit_rate, wasserstein_1d, Coupling};
use steinbench_core::steinlp::operator_for_sample;
use steinbench_core::targets::{gmm_sample, GaussianMixture};
use steinbench_core::{spanner_stein_discrepancy, DiffusionSpec, WeightedSample};

fn s1(xs: &[f64]) -> WeightedSample {
    WeightedSample::uniform(xs.iter().map(|&x| vec![x]).collect()).unwrap()
}

#[test]
fn wasserstein_examples() {
    let a = s1(&[0.0, 1.0, 3.0]);
    assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
    assert_eq!(wasserstein_1d(&s1(&[0.0]), &s1(&[1.0])).unwrap(), 1.0);
    assert_eq!(wasserstein_1d(&s1(&[0.0, 2.0]), &s1(&[1.0])).unwrap(), 1.0);
}

#[test]
fn wasserstein_matches_sorted_matching() {
    let a = s1(&[0.3, -1.2, 2.5, 0.0]);
    let b = s1(&[1.0, 1.1, -0.4, 0.2]);
    let mut x: Vec<f64> = a.points().map(|p| p[0]).collect();
    let mut y: Vec<f64> = b.points().map(|p| p[0]).collect();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let direct: f64 = x.iter().zip(&y).map(|(u, v)| (u - v).abs()).sum::<f64>() / 4.0;
    assert!((wasserstein_1d(&a, &b).unwrap() - direct).abs() < 1e-15);
}

#[test]
fn wasserstein_needs_one_dimension() {
    let two = WeightedSample::uniform(vec![vec![0.0, 0.0]]).unwrap();
    assert!(wasserstein_1d(&two, &two).is_err());
}

#[test]
fn bound_is_zero_for_identical_samples() {
    let p = GaussianMixture::standard_normal(2);
    let s = gmm_sample(&p, 30, 1).unwrap();
    let b = coupled_upper_bound_for(&s, &s, &p, &DiffusionSpec::langevin(2)).unwrap();
    assert_eq!(b.value, 0.0);
    let s1d = gmm_sample(&GaussianMixture::standard_normal(1), 30, 1).unwrap();
    let b = coupled_upper_bound_for(&s1d, &s1d, &GaussianMixture::standard_normal(1), &DiffusionSpec::langevin(1)).unwrap();
    assert_eq!(b.value, 0.0);
}

#[test]
fn bound_between_point_masses() {
    let p = GaussianMixture::standard_normal(1);
    let spec = DiffusionSpec::langevin(1);
    for z in [0.5_f64, 1.0, 3.0] {
        // 2|b(0) - b(z)| + 0 + (2|b(z)| + |m(z)|) min(z, 2) with b(x) = -x/2, m = 1
        let b = coupled_upper_bound_for(&s1(&[0.0]), &s1(&[z]), &p, &spec).unwrap();
        let expected = z + (z + 1.0) * z.min(2.0);
        assert!((b.value - expected).abs() < 1e-14, "z = {z}");
    }
}

#[test]
fn bound_dominates_discrepancy() {
    let p = GaussianMixture::symmetric_pair(4.0);
    let spec = DiffusionSpec::langevin(1);
    let reference = gmm_sample(&p, 2000, 99).unwrap();
    for seed in 0..20 {
        let q = gmm_sample(&p, 50, seed).unwrap();
        let s = spanner_stein_discrepancy(&q, &p, &spec, &Default::default()).unwrap().witness.value;
        let b = coupled_upper_bound_for(&q, &reference, &p, &spec).unwrap().value;
        assert!(s <= b, "seed {seed}: S = {s}, bound = {b}");
    }
}

#[test]
fn greedy_coupling_conserves_mass() {
    let p = GaussianMixture::standard_normal(2);
    let q = gmm_sample(&p, 7, 2).unwrap();
    let r = gmm_sample(&p, 11, 3).unwrap();
    let plan = steinbench_core::metrics::couple(&q, &r, Coupling::Greedy).unwrap();
    let mut mq = vec![0.0; q.len()];
    let mut mr = vec![0.0; r.len()];
    for (i, l, m) in plan {
        mq[i] += m;
        mr[l] += m;
    }
    for (a, b) in mq.iter().zip(q.weights()) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in mr.iter().zip(r.weights()) {
        assert!((a - b).abs() < 1e-12);
    }
    let opq = operator_for_sample(&q, &p, &DiffusionSpec::langevin(2)).unwrap();
    let opr = operator_for_sample(&r, &p, &DiffusionSpec::langevin(2)).unwrap();
    assert!(coupled_upper_bound(&q, &r, &opq, &opr, Coupling::Greedy).unwrap().value > 0.0);
}

#[test]
fn fit_rate_examples() {
    let exact: Vec<(usize, f64)> = [50, 100, 200, 400].iter().map(|&n| (n, (n as f64).powf(-0.5))).collect();
    let f = fit_rate(&exact).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-12);
    assert!(f.residual_rms < 1e-12);
    let flat: Vec<(usize, f64)> = [10, 20, 40].iter().map(|&n| (n, 0.7)).collect();
    assert!(fit_rate(&flat).unwrap().slope.abs() < 1e-12);
}

#[test]
fn fit_rate_tolerates_noise() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let vals: Vec<(usize, f64)> = [50, 100, 200, 400, 800, 1600]
        .iter()
        .map(|&n| (n, 3.0 * (n as f64).powf(-0.5) * (1.0 + rng.gen_range(-0.05..0.05))))
        .collect();
    let f = fit_rate(&vals).unwrap();
    assert!((f.slope + 0.5).abs() <= 0.1, "{}", f.slope);
}
