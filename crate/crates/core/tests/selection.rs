use nalgebra::{DMatrix, DVector};

use ric_select::criteria::CriterionKind;
use ric_select::{
    enumerate_candidates, run_experiment, sample_dgp, select, CandidateModel, CorrelationFamily,
    CorrelationSpec, Dataset, DesignSource, Error, ExperimentConfig, TrueModelSpec,
};

fn truth(n_seed: u64) -> TrueModelSpec {
    TrueModelSpec {
        beta0: vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0],
        sigma0_sq: 1.0,
        correlation: CorrelationSpec::identity(),
        design: DesignSource::Gaussian { p: 6, intercept: false, seed: n_seed },
    }
}

#[test]
fn bic_and_ric_usually_find_the_true_model_on_large_samples() {
    let cands = enumerate_candidates(6, &CandidateModel::empty(), 6).unwrap();
    let kinds = [CriterionKind::Bic, CriterionKind::Ric];
    let mut hits = [0; 2];
    for rep in 0..40 {
        let data = sample_dgp(&truth(1), 400, 5, rep).unwrap();
        let report = select(&data, CorrelationFamily::Identity, &cands, &kinds).unwrap();
        assert_eq!(report.rows.len(), 64);
        for (h, kind) in hits.iter_mut().zip(kinds) {
            *h += usize::from(report.winner(kind).unwrap().model.indices() == [0, 1, 4]);
        }
    }
    assert!(hits.iter().all(|&h| h >= 34), "hits out of 40: {hits:?}");
}

#[test]
fn noiseless_signal_is_recovered_by_every_criterion() {
    let x = DMatrix::from_fn(30, 4, |i, j| ((i * (j + 3)) as f64 * 0.37).sin() + if j == 0 { 1.0 } else { 0.0 });
    let y = DVector::from_fn(30, |i, _| 2.0 * x[(i, 1)] - 3.0 * x[(i, 3)] + 1e-4 * ((i * 7) as f64).cos());
    let data = Dataset::unnamed(y, x).unwrap();
    let cands = enumerate_candidates(4, &CandidateModel::empty(), 4).unwrap();
    let report = select(&data, CorrelationFamily::Identity, &cands, &[
        CriterionKind::Ric,
        CriterionKind::Ricc,
        CriterionKind::Aic,
        CriterionKind::Aicc,
        CriterionKind::Bic,
    ])
    .unwrap();
    for w in &report.winners {
        assert_eq!(w.model.indices(), &[1, 3], "{}", w.kind);
    }
}

#[test]
fn ric_star_prefers_the_full_model() {
    let data = sample_dgp(&truth(2), 100, 9, 0).unwrap();
    let cands = enumerate_candidates(6, &CandidateModel::empty(), 6).unwrap();
    let report = select(&data, CorrelationFamily::Identity, &cands, &[CriterionKind::RicStar]).unwrap();
    assert!(report.winner(CriterionKind::RicStar).unwrap().model.k() >= 5);
}

#[test]
fn ar1_draws_have_the_right_lag_one_correlation() {
    let spec = TrueModelSpec {
        beta0: vec![0.0],
        sigma0_sq: 1.0,
        correlation: CorrelationSpec::ar1(0.6),
        design: DesignSource::Gaussian { p: 1, intercept: true, seed: 0 },
    };
    let y = sample_dgp(&spec, 5000, 13, 0).unwrap().y().clone();
    let mean = y.mean();
    let c0: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let c1: f64 = (1..y.len()).map(|i| (y[i] - mean) * (y[i - 1] - mean)).sum();
    let r1 = c1 / c0;
    assert!((r1 - 0.6).abs() < 0.03, "lag-1 autocorrelation {r1}");
    let var = c0 / y.len() as f64;
    assert!((var - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn draws_are_keyed_by_seed_and_replication() {
    let t = truth(3);
    let a = sample_dgp(&t, 30, 1, 4).unwrap();
    assert_eq!(a, sample_dgp(&t, 30, 1, 4).unwrap());
    assert_ne!(a.y(), sample_dgp(&t, 30, 1, 5).unwrap().y());
    assert_ne!(a.y(), sample_dgp(&t, 30, 2, 4).unwrap().y());
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        truth: truth(4),
        n_values: vec![30, 60],
        replications: 100,
        criteria: vec![CriterionKind::Aic, CriterionKind::Bic, CriterionKind::RicStar],
        fit_family: CorrelationFamily::Identity,
        seed: 6,
        forced: CandidateModel::empty(),
        max_k: None,
    }
}

#[test]
fn rates_partition_and_are_reproducible() {
    let a = run_experiment(&config(), 2).unwrap();
    assert_eq!(a, run_experiment(&config(), 3).unwrap());
    assert_eq!(a.rates.len(), 6);
    for r in &a.rates {
        let total = r.true_rate + r.overfit_rate + r.underfit_rate;
        assert!((total - 1.0).abs() < 1e-12, "{r:?}");
        assert!(r.full_rate <= r.overfit_rate + 1e-12);
        assert!(r.mean_k >= 0.0 && r.mean_k <= 6.0);
    }
}

#[test]
fn forced_columns_appear_in_every_winner() {
    let mut c = config();
    c.forced = CandidateModel::new(vec![2]);
    c.max_k = Some(4);
    let s = run_experiment(&c, 2).unwrap();
    for r in &s.rates {
        assert_eq!(r.true_rate, 0.0, "no candidate can equal the truth");
        assert!(r.mean_k >= 1.0 && r.mean_k <= 4.0);
    }
}

#[test]
fn config_validation() {
    let mut c = config();
    c.replications = 0;
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = config();
    c.n_values = vec![8];
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = config();
    c.max_k = Some(7);
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = config();
    c.truth.correlation = CorrelationSpec::ar1(1.2);
    assert!(c.validate().is_err());
}

#[test]
fn config_json_uses_one_based_forced_indices() {
    let text = r#"{
        "truth": {"beta0": [1, 0], "sigma0_sq": 1, "correlation": {"family": "ar1", "theta": [0.3]},
                  "design": {"kind": "gaussian", "p": 2, "seed": 5}},
        "n_values": [20], "replications": 10, "criteria": ["RIC", "BIC"], "forced": [1]
    }"#;
    let c: ExperimentConfig = serde_json::from_str(text).unwrap();
    assert_eq!(c.forced.indices(), &[0]);
    assert_eq!(c.fit_family, CorrelationFamily::Identity);
    c.validate().unwrap();
}
