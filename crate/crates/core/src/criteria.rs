//! The six selection criteria and the RSS/penalty split of RICc, AIC and AICc.
//!
//! All criteria are "lower is better" and omit the additive constant `n + 2`.
//! The RIC family works with the REML variance `q / (n - k)`; AIC, AICc and
//! BIC use the ML variance `q / n`. Every criterion carries `log |W_hat|`,
//! which vanishes for the identity family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FittedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionKind {
    #[serde(rename = "RIC")]
    Ric,
    #[serde(rename = "RIC_STAR")]
    RicStar,
    #[serde(rename = "RICC")]
    Ricc,
    #[serde(rename = "AIC")]
    Aic,
    #[serde(rename = "AICC")]
    Aicc,
    #[serde(rename = "BIC")]
    Bic,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 6] = [
        CriterionKind::Ric,
        CriterionKind::RicStar,
        CriterionKind::Ricc,
        CriterionKind::Aic,
        CriterionKind::Aicc,
        CriterionKind::Bic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::Ric => "RIC",
            CriterionKind::RicStar => "RIC_STAR",
            CriterionKind::Ricc => "RICC",
            CriterionKind::Aic => "AIC",
            CriterionKind::Aicc => "AICC",
            CriterionKind::Bic => "BIC",
        }
    }

    /// Whether the formula contains `n - k - 2` in a denominator.
    pub fn needs_small_sample_df(self) -> bool {
        matches!(
            self,
            CriterionKind::Ric | CriterionKind::RicStar | CriterionKind::Ricc | CriterionKind::Aicc
        )
    }

    /// Checks that the criterion is defined at `(n, k)`.
    pub fn check_defined(self, n: usize, k: usize) -> Result<()> {
        let ok = if self.needs_small_sample_df() {
            n > k + 2
        } else {
            n > k
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UndefinedCriterion { kind: self, n, k })
        }
    }

    /// Parses a comma-separated list such as `ric,ricc,bic`.
    pub fn parse_list(s: &str) -> Result<Vec<CriterionKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let kind: CriterionKind = part.parse()?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty criterion list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '_' | '-'))
            .collect();
        match norm.as_str() {
            "ric" => Ok(CriterionKind::Ric),
            "ricstar" | "ric*" => Ok(CriterionKind::RicStar),
            "ricc" => Ok(CriterionKind::Ricc),
            "aic" => Ok(CriterionKind::Aic),
            "aicc" => Ok(CriterionKind::Aicc),
            "bic" => Ok(CriterionKind::Bic),
            _ => Err(Error::InvalidArgument(format!("unknown criterion '{s}'"))),
        }
    }
}

/// Criterion value from the raw ingredients.
pub fn criterion_value(
    kind: CriterionKind,
    n: usize,
    k: usize,
    sigma2_reml: f64,
    sigma2_mle: f64,
    logdet_w: f64,
) -> Result<f64> {
    kind.check_defined(n, k)?;
    let nf = n as f64;
    let kf = k as f64;
    let df = nf - kf;
    let small = df - 2.0;
    Ok(match kind {
        CriterionKind::Ric => df * sigma2_reml.ln() + logdet_w + kf * nf.ln() - kf + 4.0 / small,
        CriterionKind::RicStar => df * sigma2_reml.ln() + logdet_w - kf + 4.0 / small,
        CriterionKind::Ricc => nf * sigma2_reml.ln() + logdet_w + kf + 4.0 * (kf + 1.0) / small,
        CriterionKind::Aic => nf * sigma2_mle.ln() + logdet_w + 2.0 * kf,
        CriterionKind::Aicc => nf * sigma2_mle.ln() + logdet_w + 2.0 * nf * (kf + 1.0) / small,
        CriterionKind::Bic => nf * sigma2_mle.ln() + logdet_w + kf * nf.ln(),
    })
}

/// Evaluates `kind` on a fitted candidate.
pub fn evaluate_criterion(fit: &FittedModel, kind: CriterionKind) -> Result<f64> {
    criterion_value(
        kind,
        fit.n,
        fit.k(),
        fit.sigma2_reml,
        fit.sigma2_mle,
        fit.pieces.logdet_w,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRow {
    pub kind: CriterionKind,
    pub penalty: f64,
}

/// Complexity penalties once the goodness-of-fit part is written as
/// `n log(RSS)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTable {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<PenaltyRow>,
}

impl PenaltyTable {
    pub fn penalty(&self, kind: CriterionKind) -> Option<f64> {
        self.rows.iter().find(|r| r.kind == kind).map(|r| r.penalty)
    }

    /// `n log(RSS)`, shared by every row.
    pub fn goodness(&self, rss: f64) -> f64 {
        self.n as f64 * rss.ln()
    }

    /// `goodness + penalty` for `kind`.
    pub fn total(&self, kind: CriterionKind, rss: f64) -> Option<f64> {
        self.penalty(kind).map(|p| self.goodness(rss) + p)
    }
}

/// Penalties of RICc, AIC and AICc:
/// `-n log(n-k) + k + 4(k+1)/(n-k-2)`, `-n log n + 2k` and
/// `-n log n + 2n(k+1)/(n-k-2)`.
pub fn penalty_decomposition(n: usize, k: usize) -> Result<PenaltyTable> {
    if n <= k + 2 {
        return Err(Error::UndefinedCriterion {
            kind: CriterionKind::Ricc,
            n,
            k,
        });
    }
    let nf = n as f64;
    let kf = k as f64;
    let small = nf - kf - 2.0;
    let rows = vec![
        PenaltyRow {
            kind: CriterionKind::Ricc,
            penalty: -nf * (nf - kf).ln() + kf + 4.0 * (kf + 1.0) / small,
        },
        PenaltyRow {
            kind: CriterionKind::Aic,
            penalty: -nf * nf.ln() + 2.0 * kf,
        },
        PenaltyRow {
            kind: CriterionKind::Aicc,
            penalty: -nf * nf.ln() + 2.0 * nf * (kf + 1.0) / small,
        },
    ];
    Ok(PenaltyTable { n, k, rows })
}
