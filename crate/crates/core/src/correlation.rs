//! One-parameter correlation families and their factors.
//!
//! `build_correlation` produces the dense matrix `W(theta)`. [`Whitener`] is
//! the factor used by fitting and simulation: for the three built-in families
//! it applies `L^-1` and `L` (with `L L' = W`) in O(n) per vector, and it
//! falls back to a dense Cholesky factor for an arbitrary `W`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_factorize, SpdFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationFamily {
    Identity,
    Ar1,
    Exchangeable,
}

impl CorrelationFamily {
    pub const ALL: [CorrelationFamily; 3] = [
        CorrelationFamily::Identity,
        CorrelationFamily::Ar1,
        CorrelationFamily::Exchangeable,
    ];

    /// Number of correlation parameters.
    pub fn n_params(self) -> usize {
        match self {
            CorrelationFamily::Identity => 0,
            CorrelationFamily::Ar1 | CorrelationFamily::Exchangeable => 1,
        }
    }

    /// Open validity interval of theta at dimension `n`; `None` for identity.
    pub fn validity_region(self, n: usize) -> Option<(f64, f64)> {
        match self {
            CorrelationFamily::Identity => None,
            CorrelationFamily::Ar1 => Some((-1.0, 1.0)),
            CorrelationFamily::Exchangeable => {
                Some((-1.0 / (n.max(2) as f64 - 1.0), 1.0))
            }
        }
    }

    /// Closed interval searched by the profile optimizer.
    pub fn search_interval(self, n: usize) -> Option<(f64, f64)> {
        match self {
            CorrelationFamily::Identity => None,
            CorrelationFamily::Ar1 => Some((-0.99, 0.99)),
            CorrelationFamily::Exchangeable => {
                Some((-1.0 / (n.max(2) as f64 - 1.0) + 0.01, 0.99))
            }
        }
    }

    pub fn with_theta(self, theta: f64) -> CorrelationSpec {
        match self {
            CorrelationFamily::Identity => CorrelationSpec::identity(),
            CorrelationFamily::Ar1 => CorrelationSpec::ar1(theta),
            CorrelationFamily::Exchangeable => CorrelationSpec::exchangeable(theta),
        }
    }
}

impl fmt::Display for CorrelationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationFamily::Identity => "identity",
            CorrelationFamily::Ar1 => "ar1",
            CorrelationFamily::Exchangeable => "exchangeable",
        })
    }
}

impl FromStr for CorrelationFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "iid" => Ok(CorrelationFamily::Identity),
            "ar1" | "ar(1)" => Ok(CorrelationFamily::Ar1),
            "exchangeable" | "cs" => Ok(CorrelationFamily::Exchangeable),
            other => Err(Error::InvalidArgument(format!(
                "unknown correlation family '{other}' (expected identity, ar1 or exchangeable)"
            ))),
        }
    }
}

/// A correlation family together with its parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub family: CorrelationFamily,
    #[serde(default)]
    pub theta: Vec<f64>,
}

impl CorrelationSpec {
    pub fn identity() -> Self {
        Self {
            family: CorrelationFamily::Identity,
            theta: Vec::new(),
        }
    }

    pub fn ar1(theta: f64) -> Self {
        Self {
            family: CorrelationFamily::Ar1,
            theta: vec![theta],
        }
    }

    pub fn exchangeable(theta: f64) -> Self {
        Self {
            family: CorrelationFamily::Exchangeable,
            theta: vec![theta],
        }
    }

    /// The scalar parameter of a one-parameter family.
    pub fn param(&self) -> Option<f64> {
        self.theta.first().copied()
    }

    /// Checks the parameter count and the validity region at dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 1 {
            return Err(Error::Dimension("correlation dimension must be at least 1".into()));
        }
        if self.theta.len() != self.family.n_params() {
            return Err(self.invalid(n));
        }
        if let Some((lo, hi)) = self.family.validity_region(n) {
            if n < 2 {
                return Err(Error::Dimension(format!(
                    "{} correlation needs n >= 2, got {n}",
                    self.family
                )));
            }
            let t = self.theta[0];
            if !(t.is_finite() && t > lo && t < hi) {
                return Err(self.invalid(n));
            }
        }
        Ok(())
    }

    fn invalid(&self, n: usize) -> Error {
        Error::InvalidCorrelation {
            family: self.family,
            theta: self.theta.clone(),
            n,
        }
    }
}

impl fmt::Display for CorrelationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(t) => write!(f, "{}({t})", self.family),
            None => write!(f, "{}", self.family),
        }
    }
}

/// Dense correlation matrix `W(theta)` of size `n x n`.
pub fn build_correlation(spec: &CorrelationSpec, n: usize) -> Result<DMatrix<f64>> {
    spec.validate(n)?;
    Ok(match spec.family {
        CorrelationFamily::Identity => DMatrix::identity(n, n),
        CorrelationFamily::Ar1 => {
            let t = spec.theta[0];
            DMatrix::from_fn(n, n, |i, j| t.powi(i.abs_diff(j) as i32))
        }
        CorrelationFamily::Exchangeable => {
            let t = spec.theta[0];
            DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { t })
        }
    })
}

/// A square-root factor `L` of a correlation matrix (`L L' = W`).
///
/// `whiten` applies `L^-1`, `color` applies `L`. The structured variants never
/// materialize `W`:
/// * AR(1): innovation form, `z_1 = v_1`, `z_t = (v_t - theta v_{t-1}) / sqrt(1 - theta^2)`.
/// * exchangeable: `W = (1 - theta)(I + c 11')` and its symmetric root
///   `sqrt(1 - theta) (I + e 11')` with `e = (sqrt(1 + n c) - 1) / n`.
#[derive(Debug, Clone)]
pub enum Whitener {
    Identity { n: usize },
    Ar1 { n: usize, theta: f64 },
    Exchangeable { n: usize, theta: f64 },
    Dense(SpdFactor),
}

impl Whitener {
    pub fn new(spec: &CorrelationSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        Ok(match spec.family {
            CorrelationFamily::Identity => Whitener::Identity { n },
            CorrelationFamily::Ar1 => Whitener::Ar1 {
                n,
                theta: spec.theta[0],
            },
            CorrelationFamily::Exchangeable => Whitener::Exchangeable {
                n,
                theta: spec.theta[0],
            },
        })
    }

    /// Generic route through a dense Cholesky factor of `w`.
    pub fn dense(w: &DMatrix<f64>) -> Result<Self> {
        Ok(Whitener::Dense(spd_factorize(w)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Whitener::Identity { n } | Whitener::Ar1 { n, .. } | Whitener::Exchangeable { n, .. } => *n,
            Whitener::Dense(f) => f.dim(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Whitener::Identity { .. })
    }

    /// `log |W|`.
    pub fn log_det(&self) -> f64 {
        match *self {
            Whitener::Identity { .. } => 0.0,
            Whitener::Ar1 { n, theta } => (n as f64 - 1.0) * (1.0 - theta * theta).ln(),
            Whitener::Exchangeable { n, theta } => {
                let nf = n as f64;
                (nf - 1.0) * (1.0 - theta).ln() + (1.0 + (nf - 1.0) * theta).ln()
            }
            Whitener::Dense(ref f) => f.log_det(),
        }
    }

    fn exchangeable_e(n: usize, theta: f64) -> f64 {
        let nf = n as f64;
        let c = theta / (1.0 - theta);
        ((1.0 + nf * c).sqrt() - 1.0) / nf
    }

    /// Applies `L^-1` to a vector in place.
    pub fn whiten_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        match *self {
            Whitener::Identity { .. } => {}
            Whitener::Ar1 { theta, .. } => {
                let scale = (1.0 - theta * theta).sqrt().recip();
                let mut prev = match v.first() {
                    Some(&x) => x,
                    None => return,
                };
                for x in v.iter_mut().skip(1) {
                    let cur = *x;
                    *x = (cur - theta * prev) * scale;
                    prev = cur;
                }
            }
            Whitener::Exchangeable { n, theta } => {
                // (I + e 11')^-1 = I - e / (1 + n e) 11'
                let e = Self::exchangeable_e(n, theta);
                let g = e / (1.0 + n as f64 * e);
                let s: f64 = v.iter().sum();
                let scale = (1.0 - theta).sqrt().recip();
                for x in v.iter_mut() {
                    *x = (*x - g * s) * scale;
                }
            }
            Whitener::Dense(ref f) => f.forward_in_place(v),
        }
    }

    /// Applies `L` to a vector in place.
    pub fn color_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        match *self {
            Whitener::Identity { .. } => {}
            Whitener::Ar1 { theta, .. } => {
                let scale = (1.0 - theta * theta).sqrt();
                for t in 1..v.len() {
                    v[t] = theta * v[t - 1] + scale * v[t];
                }
            }
            Whitener::Exchangeable { n, theta } => {
                let e = Self::exchangeable_e(n, theta);
                let s: f64 = v.iter().sum();
                let scale = (1.0 - theta).sqrt();
                for x in v.iter_mut() {
                    *x = (*x + e * s) * scale;
                }
            }
            Whitener::Dense(ref f) => {
                let l = f.lower();
                for i in (0..v.len()).rev() {
                    let mut s = 0.0;
                    for j in 0..=i {
                        s += l[(i, j)] * v[j];
                    }
                    v[i] = s;
                }
            }
        }
    }

    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        self.whiten_in_place(out.as_mut_slice());
        out
    }

    pub fn whiten_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        if !self.is_identity() {
            for mut col in out.column_iter_mut() {
                self.whiten_in_place(col.as_mut_slice());
            }
        }
        out
    }

    pub fn color(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        self.color_in_place(out.as_mut_slice());
        out
    }

    pub fn color_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        if !self.is_identity() {
            for mut col in out.column_iter_mut() {
                self.color_in_place(col.as_mut_slice());
            }
        }
        out
    }

    /// The factor `L` itself as a dense matrix.
    pub fn factor_matrix(&self) -> DMatrix<f64> {
        self.color_mat(&DMatrix::identity(self.dim(), self.dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ar1_zero_is_identity() {
        let w = build_correlation(&CorrelationSpec::ar1(0.0), 3).unwrap();
        assert_eq!(w, DMatrix::identity(3, 3));
    }

    #[test]
    fn ar1_half_log_det() {
        let w = build_correlation(&CorrelationSpec::ar1(0.5), 3).unwrap();
        assert_eq!(w[(0, 2)], 0.25);
        let f = spd_factorize(&w).unwrap();
        assert_abs_diff_eq!(f.log_det(), 2.0 * 0.75f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.log_det(), -0.575364, epsilon = 1e-6);
    }

    #[test]
    fn exchangeable_boundary_is_invalid() {
        let err = build_correlation(&CorrelationSpec::exchangeable(1.0), 4).unwrap_err();
        assert!(matches!(err, Error::InvalidCorrelation { .. }));
        let err = build_correlation(&CorrelationSpec::exchangeable(-1.0 / 3.0), 4).unwrap_err();
        assert!(matches!(err, Error::InvalidCorrelation { .. }));
        assert!(build_correlation(&CorrelationSpec::exchangeable(-0.3), 4).is_ok());
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            build_correlation(&CorrelationSpec::identity(), 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            build_correlation(&CorrelationSpec::ar1(0.2), 1),
            Err(Error::Dimension(_))
        ));
        assert_eq!(
            build_correlation(&CorrelationSpec::identity(), 1).unwrap(),
            DMatrix::identity(1, 1)
        );
    }

    #[test]
    fn wrong_parameter_count() {
        let spec = CorrelationSpec {
            family: CorrelationFamily::Ar1,
            theta: vec![],
        };
        assert!(matches!(spec.validate(3), Err(Error::InvalidCorrelation { .. })));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("AR1".parse::<CorrelationFamily>().unwrap(), CorrelationFamily::Ar1);
        assert!("banded".parse::<CorrelationFamily>().is_err());
    }

    fn check_structured_against_dense(spec: &CorrelationSpec, n: usize) {
        let w = build_correlation(spec, n).unwrap();
        let fast = Whitener::new(spec, n).unwrap();
        let dense = Whitener::dense(&w).unwrap();
        assert_abs_diff_eq!(fast.log_det(), dense.log_det(), epsilon = 1e-9);
        let l = fast.factor_matrix();
        let rel = (&l * l.transpose() - &w).norm() / w.norm();
        assert!(rel < 1e-12, "factor reconstruction error {rel}");
        let v = DVector::from_fn(n, |i, _| (i as f64 * 0.7).sin() + 0.3);
        let a = fast.whiten(&v).norm_squared();
        let b = dense.whiten(&v).norm_squared();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9 * b.max(1.0));
        let round = fast.whiten(&fast.color(&v));
        assert!((round - &v).amax() < 1e-10);
    }

    #[test]
    fn structured_factors_agree_with_dense() {
        for &(t, n) in &[(0.5, 7), (-0.8, 12), (0.95, 30), (0.0, 4)] {
            check_structured_against_dense(&CorrelationSpec::ar1(t), n);
        }
        for &(t, n) in &[(0.3, 6), (-0.15, 6), (0.9, 25), (-0.04, 20)] {
            check_structured_against_dense(&CorrelationSpec::exchangeable(t), n);
        }
        check_structured_against_dense(&CorrelationSpec::identity(), 5);
    }

    proptest! {
        #[test]
        fn built_matrices_factorize(n in 2usize..=50, u in 0.001f64..0.999, pick in 0usize..2) {
            let (spec, closed) = if pick == 0 {
                let t = -0.999 + 1.998 * u;
                (CorrelationSpec::ar1(t), Some((n as f64 - 1.0) * (1.0 - t * t).ln()))
            } else {
                let lo = -1.0 / (n as f64 - 1.0);
                let t = lo + (1.0 - lo) * u;
                (CorrelationSpec::exchangeable(t), None)
            };
            let w = build_correlation(&spec, n).unwrap();
            let f = spd_factorize(&w).unwrap();
            prop_assert!(f.log_det().is_finite());
            let rel = (f.reconstruct() - &w).norm() / w.norm();
            prop_assert!(rel <= 1e-8);
            for i in 0..n {
                prop_assert_eq!(w[(i, i)], 1.0);
            }
            if let Some(ld) = closed {
                prop_assert!((f.log_det() - ld).abs() <= 1e-9, "{} vs {}", f.log_det(), ld);
            }
        }
    }
}
