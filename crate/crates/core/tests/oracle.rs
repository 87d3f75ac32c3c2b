use approx::assert_relative_eq;
use rayon::prelude::*;

use ric_select::stats::MeanVar;
use ric_select::{
    estimated_divergence, expectation_identities, full_loglik, kl_likelihood, kl_residual,
    population_neg2_loglik, population_neg2_residual_loglik, profile_reml, CandidateModel,
    CorrelationFamily, CorrelationSpec, DesignSource, TrueModelSpec,
};

fn truth(correlation: CorrelationSpec) -> TrueModelSpec {
    TrueModelSpec {
        beta0: vec![1.0, -0.5, 0.0, 0.8],
        sigma0_sq: 1.5,
        correlation,
        design: DesignSource::Gaussian { p: 4, intercept: true, seed: 41 },
    }
}

#[test]
fn full_likelihood_score_matches_simulation() {
    let pop = truth(CorrelationSpec::ar1(0.6)).at(25).unwrap();
    let beta = [0.8, -0.2, 0.1, 1.0];
    let spec = CorrelationSpec::exchangeable(0.2);
    let oracle = population_neg2_loglik(&pop, &beta, &spec, 2.0).unwrap().value;
    let mv: MeanVar = (0..50_000u64)
        .into_par_iter()
        .map(|r| -2.0 * full_loglik(&pop.sample(3, r).unwrap(), &beta, &spec, 2.0).unwrap())
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    assert!((mv.mean() - oracle).abs() < 4.0 * mv.std_error(), "{} vs {oracle}", mv.mean());
}

#[test]
fn residual_score_components_add_up() {
    let pop = truth(CorrelationSpec::exchangeable(0.3)).at(30).unwrap();
    let score = population_neg2_residual_loglik(&pop, &CandidateModel::new(vec![0, 1]), &CorrelationSpec::ar1(0.2), 0.9).unwrap();
    assert_relative_eq!(score.components.sum(), score.value, max_relative = 1e-12);
    assert!(score.components.bias > 0.0, "dropping a true column must leave bias");
}

#[test]
fn superset_models_carry_no_bias() {
    let pop = truth(CorrelationSpec::ar1(0.4)).at(30).unwrap();
    for model in [vec![0, 1, 3], vec![0, 1, 2, 3]] {
        let s = population_neg2_residual_loglik(&pop, &CandidateModel::new(model), &CorrelationSpec::identity(), 1.0).unwrap();
        assert!(s.components.bias.abs() < 1e-9 * pop.mean().norm_squared());
    }
}

#[test]
fn residual_kl_falls_along_nested_chain_under_ar1() {
    let pop = truth(CorrelationSpec::ar1(0.5)).at(40).unwrap();
    let spec = CorrelationSpec::ar1(0.5);
    let a = kl_residual(&pop, &CandidateModel::new(vec![0, 1, 3]), &spec, 1.5).unwrap();
    let b = kl_residual(&pop, &CandidateModel::full(4), &spec, 1.5).unwrap();
    assert!(a.abs() < 1e-10);
    assert!(b < a - 1e-9);
}

#[test]
fn likelihood_kl_is_positive_away_from_truth() {
    let pop = truth(CorrelationSpec::ar1(0.3)).at(20).unwrap();
    let beta0: Vec<f64> = pop.beta0().iter().copied().collect();
    assert!(kl_likelihood(&pop, &beta0, &CorrelationSpec::ar1(0.3), 1.5).unwrap().abs() < 1e-10);
    assert!(kl_likelihood(&pop, &beta0, &CorrelationSpec::ar1(0.31), 1.5).unwrap() > 0.0);
    assert!(kl_likelihood(&pop, &beta0, &CorrelationSpec::ar1(0.3), 1.51).unwrap() > 0.0);
    let mut moved = beta0.clone();
    moved[2] = 0.01;
    assert!(kl_likelihood(&pop, &moved, &CorrelationSpec::ar1(0.3), 1.5).unwrap() > 0.0);
}

#[test]
fn estimated_divergence_uses_the_fitted_parameters() {
    let pop = truth(CorrelationSpec::ar1(0.5)).at(50).unwrap();
    let data = pop.sample(8, 0).unwrap();
    let model = CandidateModel::full(4);
    let fit = profile_reml(&data, &model, CorrelationFamily::Ar1).unwrap();
    let d = estimated_divergence(&pop, &fit).unwrap();
    let direct = population_neg2_residual_loglik(&pop, &model, &fit.correlation(), fit.sigma2_reml).unwrap();
    let c = &direct.components;
    assert_relative_eq!(d.value, direct.value - c.dimension_constant - c.logdet_xx_term, max_relative = 1e-12);
    assert_eq!(d.components.dimension_constant, 0.0);
}

#[test]
fn moment_targets() {
    let t = expectation_identities(20, 2).unwrap();
    assert_relative_eq!(t.chi2_ratio_mean, 20.25, max_relative = 1e-15);
    assert_relative_eq!(t.quadform_mean, 2.25, max_relative = 1e-15);
    assert!(expectation_identities(4, 2).is_err());
}

#[test]
fn log_gram_determinant_approaches_k_log_n() {
    let design = DesignSource::Gaussian { p: 6, intercept: false, seed: 12 };
    let mut gaps = Vec::new();
    for n in [50usize, 200, 800, 3200] {
        let x = design.matrix(n).unwrap();
        let logdet = ric_select::spd_factorize(&(x.transpose() * &x)).unwrap().log_det();
        gaps.push((logdet - 6.0 * (n as f64).ln()).abs() / (6.0 * (n as f64).ln()));
    }
    assert!(gaps[3] < 0.02, "relative gaps {gaps:?}");
    assert!(gaps[3] < gaps[0], "relative gaps {gaps:?}");
}
