//! Exact population expectations of `-2 log L` under the truth.
//!
//! Scores keep every constant, including `(n - k) log 2pi` and the
//! `-log |X_A'X_A|` term of the residual likelihood. With `M = W^-1 - H_A`:
//!
//! `E0[y'My] = (X beta0)' M (X beta0) + sigma0^2 tr(M W0)`,
//!
//! which the code evaluates on whitened quantities: with `W = L L'`,
//! `tr(M W0) = || (I - P*) L^-1 L0 ||_F^2`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationSpec, Whitener};
use crate::data::{CandidateModel, Population};
use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::linalg::{spd_factorize, Projection};
use crate::projector::rank_error;

/// Named terms of an expected `-2 log L`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    /// `(n - k) log 2pi`, or `n log 2pi` for the full likelihood.
    pub dimension_constant: f64,
    /// `-log |X_A'X_A|`.
    pub logdet_xx_term: f64,
    /// `(n - k) log sigma2`, or `n log sigma2`.
    pub log_sigma2_term: f64,
    pub logdet_w_term: f64,
    /// `log |X_A'W^-1 X_A|`.
    pub logdet_xwx_term: f64,
    /// Noise part of the expected quadratic form, divided by `sigma2`.
    pub expected_quadratic: f64,
    /// Mean part of the expected quadratic form, divided by `sigma2`.
    pub bias: f64,
}

impl ScoreComponents {
    pub fn sum(&self) -> f64 {
        self.dimension_constant
            + self.logdet_xx_term
            + self.log_sigma2_term
            + self.logdet_w_term
            + self.logdet_xwx_term
            + self.expected_quadratic
            + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationScore {
    pub value: f64,
    pub components: ScoreComponents,
}

impl From<ScoreComponents> for PopulationScore {
    fn from(components: ScoreComponents) -> Self {
        Self {
            value: components.sum(),
            components,
        }
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

/// `E0[y'(W^-1 - H_A)y]` split into mean and noise parts, plus the whitened
/// projection it was computed with.
struct ExpectedQuadratic {
    mean_part: f64,
    noise_part: f64,
    projection: Projection,
}

fn expected_quadratic(
    pop: &Population,
    model: &CandidateModel,
    whitener: &Whitener,
) -> Result<ExpectedQuadratic> {
    let xa = pop.x().select_columns(model.indices());
    let projection = Projection::new(whitener.whiten_mat(&xa)).map_err(|e| rank_error(model, e))?;
    let mean_w = whitener.whiten(pop.mean());
    let mean_part = projection.residual_ss(&mean_w);
    // L^-1 L0
    let cross = whitener.whiten_mat(&pop.factor().factor_matrix());
    let noise_part = pop.sigma0_sq() * projection.residual_trace(&cross);
    Ok(ExpectedQuadratic {
        mean_part,
        noise_part,
        projection,
    })
}

/// `E0[-2 L_R]` for candidate `model` with working correlation `spec` and
/// variance `sigma2`.
pub fn population_neg2_residual_loglik(
    pop: &Population,
    model: &CandidateModel,
    spec: &CorrelationSpec,
    sigma2: f64,
) -> Result<PopulationScore> {
    check_sigma2(sigma2)?;
    model.check_range(pop.p())?;
    let n = pop.n();
    let k = model.k();
    if k >= n {
        return Err(Error::Dimension(format!("k = {k} leaves no residual degrees of freedom at n = {n}")));
    }
    let whitener = Whitener::new(spec, n)?;
    let eq = expected_quadratic(pop, model, &whitener)?;
    let logdet_xx = if model.is_empty() {
        0.0
    } else {
        let xa = pop.x().select_columns(model.indices());
        spd_factorize(&xa.tr_mul(&xa))
            .map_err(|e| rank_error(model, e))?
            .log_det()
    };
    let df = (n - k) as f64;
    Ok(ScoreComponents {
        dimension_constant: df * (2.0 * PI).ln(),
        logdet_xx_term: -logdet_xx,
        log_sigma2_term: df * sigma2.ln(),
        logdet_w_term: whitener.log_det(),
        logdet_xwx_term: eq.projection.log_det_gram(),
        expected_quadratic: eq.noise_part / sigma2,
        bias: eq.mean_part / sigma2,
    }
    .into())
}

/// `E0[-2 L]` for the full Gaussian likelihood at `(beta, W(theta), sigma2)`.
///
/// Uses the exact trace `sigma0^2 tr(W^-1 W0)`, which equals `n sigma0^2`
/// when `W = W0`.
pub fn population_neg2_loglik(
    pop: &Population,
    beta: &[f64],
    spec: &CorrelationSpec,
    sigma2: f64,
) -> Result<PopulationScore> {
    check_sigma2(sigma2)?;
    if beta.len() != pop.p() {
        return Err(Error::Dimension(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            pop.p()
        )));
    }
    let n = pop.n();
    let whitener = Whitener::new(spec, n)?;
    let shift = pop.x() * DVector::from_column_slice(beta) - pop.mean();
    let bias = whitener.whiten(&shift).norm_squared();
    let trace = whitener.whiten_mat(&pop.factor().factor_matrix()).norm_squared();
    let nf = n as f64;
    Ok(ScoreComponents {
        dimension_constant: nf * (2.0 * PI).ln(),
        log_sigma2_term: nf * sigma2.ln(),
        logdet_w_term: whitener.log_det(),
        expected_quadratic: pop.sigma0_sq() * trace / sigma2,
        bias: bias / sigma2,
        ..Default::default()
    }
    .into())
}

/// Residual-likelihood divergence of a candidate from the truth.
///
/// Negative values are expected for supersets of the true active set.
pub fn kl_residual(
    pop: &Population,
    model: &CandidateModel,
    spec: &CorrelationSpec,
    sigma2: f64,
) -> Result<f64> {
    let candidate = population_neg2_residual_loglik(pop, model, spec, sigma2)?;
    let truth = population_neg2_residual_loglik(pop, &pop.active_set(), pop.correlation(), pop.sigma0_sq())?;
    Ok(candidate.value - truth.value)
}

/// Full-likelihood divergence; twice the Gaussian Kullback-Leibler divergence.
pub fn kl_likelihood(pop: &Population, beta: &[f64], spec: &CorrelationSpec, sigma2: f64) -> Result<f64> {
    let candidate = population_neg2_loglik(pop, beta, spec, sigma2)?;
    let beta0: Vec<f64> = pop.beta0().iter().copied().collect();
    let truth = population_neg2_loglik(pop, &beta0, pop.correlation(), pop.sigma0_sq())?;
    Ok(candidate.value - truth.value)
}

/// Plug-in divergence of a fitted model:
///
/// `(n-k) log s2 + log|W| + log|X'W^-1 X| + mu'(W^-1 - H)mu / s2
///  + sigma0^2 tr{(W^-1 - H) W0} / s2`
///
/// at `(theta_hat, sigma2_reml)`. The `bias` component is the
/// `mu'(W^-1 - H)mu / s2` term, `expected_quadratic` the trace term.
pub fn estimated_divergence(pop: &Population, fit: &FittedModel) -> Result<PopulationScore> {
    if fit.n != pop.n() {
        return Err(Error::Dimension(format!(
            "fit has n = {}, population has n = {}",
            fit.n,
            pop.n()
        )));
    }
    let whitener = Whitener::new(&fit.correlation(), pop.n())?;
    let eq = expected_quadratic(pop, &fit.model, &whitener)?;
    let s2 = fit.sigma2_reml;
    let df = (fit.n - fit.k()) as f64;
    Ok(ScoreComponents {
        log_sigma2_term: df * s2.ln(),
        logdet_w_term: whitener.log_det(),
        logdet_xwx_term: eq.projection.log_det_gram(),
        expected_quadratic: eq.noise_part / s2,
        bias: eq.mean_part / s2,
        ..Default::default()
    }
    .into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTargets {
    /// `E[(n-k) sigma0^2 / sigma2_hat] = (n-k)^2 / (n-k-2)`.
    pub chi2_ratio_mean: f64,
    /// `E[(X b_hat - X b0)'W^-1(X b_hat - X b0) / sigma2_hat] = k(n-k)/(n-k-2)`.
    pub quadform_mean: f64,
}

pub fn expectation_identities(n: usize, k: usize) -> Result<MomentTargets> {
    if n <= k + 2 {
        return Err(Error::UndefinedCriterion {
            kind: crate::criteria::CriterionKind::Ricc,
            n,
            k,
        });
    }
    let df = (n - k) as f64;
    Ok(MomentTargets {
        chi2_ratio_mean: df * df / (df - 2.0),
        quadform_mean: k as f64 * df / (df - 2.0),
    })
}
