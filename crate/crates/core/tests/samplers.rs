use nalgebra::DMatrix;
use steinbench_core::samplers::{
    iid_chain, mala_chain, mala_log_accept_ratio, sgrld_chain, ChainConfig, IdentityMetric, PseudoHuberMetric,
    ScalarMetric,
};
use steinbench_core::target::FnTarget;
use steinbench_core::targets::{GaussianMixture, LogisticRegression, StudentTRegression};
use steinbench_core::{Error, TargetModel};

fn normal_1d() -> GaussianMixture {
    GaussianMixture::standard_normal(1)
}

#[test]
fn flat_target_without_noise_stays_put() {
    let t = FnTarget::new(2, |_: &[f64]| vec![0.0, 0.0], |_: &[f64]| 0.0);
    let mut cfg = ChainConfig::new(0.3, 50, vec![1.5, -2.0]);
    cfg.noise_scale = 0.0;
    let mala = mala_chain(&t, &cfg).unwrap();
    assert!(mala.states.iter().all(|s| s == &vec![1.5, -2.0]));
    assert_eq!(mala.sample.len(), 1);
    let sgrld = sgrld_chain(&t, &IdentityMetric, &cfg).unwrap();
    assert!(sgrld.states.iter().all(|s| s == &vec![1.5, -2.0]));
}

#[test]
fn staying_put_is_always_accepted() {
    let t = normal_1d();
    let r = mala_log_accept_ratio(&t, &[0.7], &[0.7], 0.4).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn accept_ratio_matches_hand_computation() {
    let t = normal_1d();
    let (x, y, eps) = (0.5_f64, -0.25_f64, 0.3_f64);
    let lq = |to: f64, from: f64| -(to - from - 0.5 * eps * (-from)).powi(2) / (2.0 * eps);
    let expected = (-y * y / 2.0) - (-x * x / 2.0) + lq(x, y) - lq(y, x);
    let got = mala_log_accept_ratio(&t, &[x], &[y], eps).unwrap();
    assert!((got - expected).abs() < 1e-14);
}

#[test]
fn mala_normal_moments() {
    let t = normal_1d();
    let mut cfg = ChainConfig::new(0.5, 100_000, vec![0.0]);
    cfg.burn_in = 0.0;
    cfg.seed = 1;
    let out = mala_chain(&t, &cfg).unwrap();
    let xs: Vec<f64> = out.states.iter().map(|s| s[0]).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // stderr inflated by the integrated autocorrelation time, estimated from batch means
    let batches = 100;
    let size = xs.len() / batches;
    let bm: Vec<f64> = xs.chunks(size).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let bvar = bm.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (bm.len() - 1) as f64;
    let stderr = (bvar / bm.len() as f64).sqrt();
    assert!(mean.abs() <= 4.0 * stderr, "mean {mean} stderr {stderr}");
    assert!((var - 1.0).abs() <= 0.1, "variance {var}");
}

#[test]
fn mala_small_steps_mostly_accepted() {
    let mut cfg = ChainConfig::new(0.05, 10_000, vec![0.0]);
    cfg.seed = 2;
    let out = mala_chain(&normal_1d(), &cfg).unwrap();
    assert!(out.acceptance_rate.unwrap() > 0.9);
}

#[test]
fn chains_are_deterministic_per_seed() {
    let t = normal_1d();
    let mut cfg = ChainConfig::new(0.4, 500, vec![0.1]);
    cfg.seed = 17;
    let a = mala_chain(&t, &cfg).unwrap();
    let b = mala_chain(&t, &cfg).unwrap();
    assert_eq!(a.states, b.states);
    cfg.seed = 18;
    let c = mala_chain(&t, &cfg).unwrap();
    assert_ne!(a.states, c.states);
    let g = GaussianMixture::symmetric_pair(4.0);
    assert_eq!(iid_chain(&g, 20, 3).unwrap(), iid_chain(&g, 20, 3).unwrap());
}

fn logistic() -> LogisticRegression {
    let v = DMatrix::from_row_slice(5, 2, &[1.0, 0.2, -0.5, 1.0, 0.3, -0.7, 1.2, 0.4, -0.1, -1.0]);
    LogisticRegression::new(v, vec![1.0, -1.0, 1.0, 1.0, -1.0], vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap()
}

fn student_t() -> StudentTRegression {
    let v = DMatrix::from_row_slice(5, 2, &[1.0, 0.5, -0.3, 1.0, 0.2, -0.7, 0.9, 0.1, -0.4, 0.6]);
    StudentTRegression::new(v, vec![0.4, -1.0, 0.3, 2.0, -0.2], 4.0, DMatrix::identity(5, 5), 0.8).unwrap()
}

fn pairs(l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..l {
        for b in a + 1..l {
            out.push(vec![a, b]);
        }
    }
    out
}

fn assert_unbiased(t: &dyn TargetModel, x: &[f64]) {
    let batches = pairs(t.num_data_terms().unwrap());
    assert_eq!(batches.len(), 10);
    let mut avg = vec![0.0; t.dim()];
    for b in &batches {
        for (a, v) in avg.iter_mut().zip(t.minibatch_score(x, b).unwrap()) {
            *a += v / batches.len() as f64;
        }
    }
    let full = t.score(x);
    for (a, f) in avg.iter().zip(&full) {
        assert!((a - f).abs() <= 1e-12 * f.abs().max(1.0), "{avg:?} vs {full:?}");
    }
}

#[test]
fn minibatch_scores_average_to_full_score() {
    assert_unbiased(&logistic(), &[0.3, -0.6]);
    assert_unbiased(&student_t(), &[0.3, -0.6]);
}

#[test]
fn sgrld_metric_at_origin() {
    let g = PseudoHuberMetric::new(0.5).unwrap();
    assert_eq!(1.0 / g.lambda(&[0.0, 0.0, 0.0]), 2.0);
}

#[test]
fn sgrld_runs_with_minibatches() {
    let t = student_t();
    let mut cfg = ChainConfig::new(0.01, 2000, vec![0.0, 0.0]);
    cfg.minibatch = Some(2);
    cfg.thin = 10;
    cfg.seed = 5;
    let out = sgrld_chain(&t, &PseudoHuberMetric::new(0.8).unwrap(), &cfg).unwrap();
    assert_eq!(out.states.len(), 180);
    assert!(out.states.iter().flatten().all(|v| v.is_finite()));
    cfg.minibatch = Some(6);
    assert!(sgrld_chain(&t, &IdentityMetric, &cfg).is_err());
}

#[test]
fn sgrld_rejects_non_positive_metric() {
    struct Bad;
    impl ScalarMetric for Bad {
        fn lambda(&self, _x: &[f64]) -> f64 {
            -1.0
        }
        fn grad_lambda(&self, x: &[f64]) -> Vec<f64> {
            vec![0.0; x.len()]
        }
    }
    let cfg = ChainConfig::new(0.1, 10, vec![0.25]);
    match sgrld_chain(&normal_1d(), &Bad, &cfg) {
        Err(Error::NonSpdMetric { state }) => assert_eq!(state, vec![0.25]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_configs_rejected() {
    let t = normal_1d();
    assert!(mala_chain(&t, &ChainConfig::new(0.0, 10, vec![0.0])).is_err());
    let mut cfg = ChainConfig::new(0.1, 10, vec![0.0]);
    cfg.thin = 0;
    assert!(mala_chain(&t, &cfg).is_err());
    assert!(mala_chain(&t, &ChainConfig::new(0.1, 10, vec![0.0, 1.0])).is_err());
}

#[test]
fn long_chains_build_valid_measures() {
    let states: Vec<Vec<f64>> = (0..200_000).map(|i| vec![(i % 70_001) as f64 * 1e-3]).collect();
    let s = steinbench_core::samplers::empirical_measure(&states).unwrap();
    assert_eq!(s.len(), 70_001);
    assert_eq!(s.weight(0), 3.0 / 200_000.0);
    let big = steinbench_core::WeightedSample::uniform((0..300_000).map(|i| vec![i as f64]).collect());
    assert!(big.is_ok());
}
