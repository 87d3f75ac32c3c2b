//! The GLS projector pieces of the residual likelihood.
//!
//! With `W = L L'`, `X* = L^-1 X_A` and `y* = L^-1 y`,
//! `q = y'(W^-1 - H_A) y` is the residual sum of squares of `y*` on `X*`,
//! where `H_A = W^-1 X_A (X_A' W^-1 X_A)^-1 X_A' W^-1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::correlation::Whitener;
use crate::data::{CandidateModel, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{spd_factorize, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorPieces {
    /// `y'(W^-1 - H_A) y`.
    pub q: f64,
    /// `log |X_A' W^-1 X_A|`.
    pub logdet_xwx: f64,
    /// `log |X_A' X_A|`.
    pub logdet_xx: f64,
}

/// Projector pieces for a dense correlation matrix `w`.
pub fn projector_pieces(
    data: &Dataset,
    model: &CandidateModel,
    w: &DMatrix<f64>,
) -> Result<ProjectorPieces> {
    if w.nrows() != data.n() {
        return Err(Error::Dimension(format!(
            "correlation matrix is {}x{}, dataset has n = {}",
            w.nrows(),
            w.ncols(),
            data.n()
        )));
    }
    let whitener = Whitener::dense(w)?;
    Ok(WhitenedFit::new(data, model, &whitener)?.pieces())
}

pub(crate) fn rank_error(model: &CandidateModel, err: Error) -> Error {
    match err {
        Error::NotSpd(msg) => Error::NotSpd(format!(
            "active design of model {model} is rank deficient ({msg})"
        )),
        other => other,
    }
}

/// GLS fit of one candidate under a fixed correlation factor.
#[derive(Debug, Clone)]
pub(crate) struct WhitenedFit {
    pub projection: Projection,
    pub beta: DVector<f64>,
    pub q: f64,
    /// `y' W^-1 y`, used to judge a perfect fit.
    pub total: f64,
    pub logdet_w: f64,
    pub logdet_xwx: f64,
    pub logdet_xx: f64,
}

impl WhitenedFit {
    pub fn new(data: &Dataset, model: &CandidateModel, whitener: &Whitener) -> Result<Self> {
        if whitener.dim() != data.n() {
            return Err(Error::Dimension(format!(
                "correlation factor has dimension {}, dataset has n = {}",
                whitener.dim(),
                data.n()
            )));
        }
        let xa = data.active_design(model)?;
        let logdet_xx = if whitener.is_identity() || model.is_empty() {
            None
        } else {
            Some(
                spd_factorize(&xa.tr_mul(&xa))
                    .map_err(|e| rank_error(model, e))?
                    .log_det(),
            )
        };
        let projection =
            Projection::new(whitener.whiten_mat(&xa)).map_err(|e| rank_error(model, e))?;
        let yw = whitener.whiten(data.y());
        let beta = projection.coefficients(&yw);
        let q = if model.is_empty() {
            yw.norm_squared()
        } else {
            (&yw - projection.design() * &beta).norm_squared()
        };
        let logdet_xwx = projection.log_det_gram();
        Ok(Self {
            projection,
            beta,
            q,
            total: yw.norm_squared(),
            logdet_w: whitener.log_det(),
            logdet_xwx,
            logdet_xx: logdet_xx.unwrap_or(logdet_xwx),
        })
    }

    pub fn pieces(&self) -> ProjectorPieces {
        ProjectorPieces {
            q: self.q,
            logdet_xwx: self.logdet_xwx,
            logdet_xx: self.logdet_xx,
        }
    }
}
