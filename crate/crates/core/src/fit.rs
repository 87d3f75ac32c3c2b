//! GLS estimation, the residual (restricted) log-likelihood, the full
//! Gaussian log-likelihood and profile-REML estimation of theta.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationFamily, CorrelationSpec, Whitener};
use crate::data::{CandidateModel, Dataset};
use crate::error::{Error, Result};
use crate::optimize::bracketed_max;
use crate::projector::WhitenedFit;

/// `q` at or below this fraction of `y'W^-1 y` counts as a perfect fit.
pub const PERFECT_FIT_TOL: f64 = 1e-20;

/// Golden-section tolerance on theta.
pub const THETA_TOL: f64 = 1e-8;
pub const THETA_MAX_ITER: usize = 200;
/// Coarse grid cells scanned before the golden-section refinement.
pub const THETA_GRID: usize = 20;
/// Distance from the search-interval edge that raises the boundary flag.
pub const BOUNDARY_TOL: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Likelihood building blocks of one fitted candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodPieces {
    pub q: f64,
    pub logdet_w: f64,
    pub logdet_xwx: f64,
    pub logdet_xx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlsFit {
    pub beta_hat: Vec<f64>,
    pub sigma2_reml: f64,
    pub sigma2_mle: f64,
    pub pieces: LikelihoodPieces,
}

/// A candidate fitted by profile REML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: CandidateModel,
    pub n: usize,
    pub family: CorrelationFamily,
    pub beta_hat: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// `q / (n - k)`.
    pub sigma2_reml: f64,
    /// `q / n`.
    pub sigma2_mle: f64,
    pub pieces: LikelihoodPieces,
    /// Residual log-likelihood at `(theta_hat, sigma2_reml)`.
    pub resid_loglik: f64,
    /// Set when `theta_hat` sits on the edge of the search interval.
    #[serde(default)]
    pub boundary: bool,
}

impl FittedModel {
    pub fn k(&self) -> usize {
        self.model.k()
    }

    /// The fitted correlation `W(theta_hat)`.
    pub fn correlation(&self) -> CorrelationSpec {
        CorrelationSpec {
            family: self.family,
            theta: self.theta_hat.clone(),
        }
    }
}

fn check_df(n: usize, k: usize, min_df: usize) -> Result<()> {
    if n < k + min_df {
        return Err(Error::Dimension(format!(
            "n - k = {} - {k} is below the required {min_df}",
            n
        )));
    }
    Ok(())
}

fn gls_from(model: &CandidateModel, n: usize, fit: &WhitenedFit) -> Result<GlsFit> {
    let k = model.k();
    if fit.q <= PERFECT_FIT_TOL * fit.total || fit.q <= 0.0 {
        return Err(Error::PerfectFit {
            model: model.to_string(),
        });
    }
    Ok(GlsFit {
        beta_hat: fit.beta.iter().copied().collect(),
        sigma2_reml: fit.q / (n - k) as f64,
        sigma2_mle: fit.q / n as f64,
        pieces: LikelihoodPieces {
            q: fit.q,
            logdet_w: fit.logdet_w,
            logdet_xwx: fit.logdet_xwx,
            logdet_xx: fit.logdet_xx,
        },
    })
}

/// GLS fit of `model` with a known correlation factor.
pub fn gls_fit_with(data: &Dataset, model: &CandidateModel, whitener: &Whitener) -> Result<GlsFit> {
    check_df(data.n(), model.k(), 1)?;
    let fit = WhitenedFit::new(data, model, whitener)?;
    gls_from(model, data.n(), &fit)
}

/// GLS fit of `model` with a dense correlation matrix `w`.
pub fn gls_fit(data: &Dataset, model: &CandidateModel, w: &DMatrix<f64>) -> Result<GlsFit> {
    gls_fit_with(data, model, &Whitener::dense(w)?)
}

/// Residual log-likelihood from its pieces, every constant retained:
///
/// `-(n-k)/2 log 2pi + 1/2 log|X'X| - (n-k)/2 log s2 - 1/2 log|W|
///  - 1/2 log|X'W^-1 X| - q / (2 s2)`.
pub fn residual_loglik_from_pieces(n: usize, k: usize, pieces: &LikelihoodPieces, sigma2: f64) -> f64 {
    let df = (n - k) as f64;
    -0.5 * df * LN_2PI + 0.5 * pieces.logdet_xx
        - 0.5 * df * sigma2.ln()
        - 0.5 * pieces.logdet_w
        - 0.5 * pieces.logdet_xwx
        - 0.5 * pieces.q / sigma2
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Residual (restricted) log-likelihood of `model` at `W(theta)` and `sigma2`.
pub fn residual_loglik(
    data: &Dataset,
    model: &CandidateModel,
    spec: &CorrelationSpec,
    sigma2: f64,
) -> Result<f64> {
    check_sigma2(sigma2)?;
    check_df(data.n(), model.k(), 1)?;
    let whitener = Whitener::new(spec, data.n())?;
    let fit = WhitenedFit::new(data, model, &whitener)?;
    let pieces = LikelihoodPieces {
        q: fit.q,
        logdet_w: fit.logdet_w,
        logdet_xwx: fit.logdet_xwx,
        logdet_xx: fit.logdet_xx,
    };
    Ok(residual_loglik_from_pieces(data.n(), model.k(), &pieces, sigma2))
}

/// Gaussian log-likelihood `-1/2 [n log(2 pi s2) + log|W| + (y-Xb)'W^-1(y-Xb)/s2]`.
///
/// `beta` has one entry per design column.
pub fn full_loglik(data: &Dataset, beta: &[f64], spec: &CorrelationSpec, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    if beta.len() != data.p() {
        return Err(Error::Dimension(format!(
            "beta has {} entries, design has {} columns",
            beta.len(),
            data.p()
        )));
    }
    let whitener = Whitener::new(spec, data.n())?;
    let resid = data.y() - data.x() * DVector::from_column_slice(beta);
    let quad = whitener.whiten(&resid).norm_squared();
    let n = data.n() as f64;
    Ok(-0.5 * (n * (2.0 * PI * sigma2).ln() + whitener.log_det() + quad / sigma2))
}

/// Residual log-likelihood at `spec` with `sigma2` profiled out as `q / (n - k)`.
pub fn profiled_residual_loglik(data: &Dataset, model: &CandidateModel, spec: &CorrelationSpec) -> Result<f64> {
    check_df(data.n(), model.k(), 1)?;
    let whitener = Whitener::new(spec, data.n())?;
    let gls = gls_fit_with(data, model, &whitener)?;
    Ok(residual_loglik_from_pieces(
        data.n(),
        model.k(),
        &gls.pieces,
        gls.sigma2_reml,
    ))
}

/// Fits `model` by maximizing the profiled residual log-likelihood over the
/// family's parameter. Identity needs no search.
pub fn profile_reml(data: &Dataset, model: &CandidateModel, family: CorrelationFamily) -> Result<FittedModel> {
    let n = data.n();
    check_df(n, model.k(), 3)?;
    model.check_range(data.p())?;

    let (theta_hat, boundary) = match family.search_interval(n) {
        None => (Vec::new(), false),
        Some((lo, hi)) => {
            let best = bracketed_max(
                |t| profiled_residual_loglik(data, model, &family.with_theta(t)),
                lo,
                hi,
                THETA_GRID,
                THETA_TOL,
                THETA_MAX_ITER,
            )?;
            let edge = (best.x - lo).abs() <= BOUNDARY_TOL || (hi - best.x).abs() <= BOUNDARY_TOL;
            (vec![best.x], edge)
        }
    };

    let spec = CorrelationSpec {
        family,
        theta: theta_hat.clone(),
    };
    let whitener = Whitener::new(&spec, n)?;
    let gls = gls_fit_with(data, model, &whitener)?;
    let resid_loglik = residual_loglik_from_pieces(n, model.k(), &gls.pieces, gls.sigma2_reml);
    Ok(FittedModel {
        model: model.clone(),
        n,
        family,
        beta_hat: gls.beta_hat,
        theta_hat,
        sigma2_reml: gls.sigma2_reml,
        sigma2_mle: gls.sigma2_mle,
        pieces: gls.pieces,
        resid_loglik,
        boundary,
    })
}
