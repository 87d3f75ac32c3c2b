//! The versioned report document written by the CLI.
//!
//! Reports are compact JSON with every real printed to 17 significant digits,
//! which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::fit::FittedModel;
use crate::selection::{CriterionEntry, SelectionReport};
use crate::simulate::ExperimentSummary;

pub const SCHEMA: &str = "ric-select/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPayload {
    pub columns: Vec<String>,
    pub fit: FittedModel,
    pub criteria: Vec<CriterionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Fit(FitPayload),
    Selection(SelectionReport),
    Experiment(ExperimentSummary),
    Identities(ExperimentSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub command: Vec<String>,
    pub input_digest: String,
    pub payload: Payload,
    pub timing_ms: u64,
}

impl ReportDocument {
    pub fn new(command: Vec<String>, input_digest: String, payload: Payload, timing_ms: u64) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            command,
            input_digest,
            payload,
            timing_ms,
        }
    }
}

/// Compact JSON formatter that prints reals as `d.dddddddddddddddde±x`.
struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json(text: &str) -> Result<ReportDocument> {
    serde_json::from_str(text).map_err(|e| Error::InvalidData(format!("malformed report: {e}")))
}

/// Serialized payload alone; the part covered by the determinism contract.
pub fn payload_json(doc: &ReportDocument) -> Result<String> {
    to_json(&doc.payload)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Human-readable rendering of a report.
pub fn render_pretty(doc: &ReportDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}  {}", doc.schema, doc.command.join(" "));
    let _ = writeln!(s, "input sha256 {}  ({} ms)", doc.input_digest, doc.timing_ms);
    match &doc.payload {
        Payload::Fit(f) => {
            let fit = &f.fit;
            let names: Vec<&str> = fit.model.indices().iter().map(|&j| f.columns[j].as_str()).collect();
            let _ = writeln!(s, "model {} [{}]  n = {}  family = {}", fit.model, names.join(", "), fit.n, fit.family);
            for (name, b) in names.iter().zip(&fit.beta_hat) {
                let _ = writeln!(s, "  {name:>16}  {b:>14.6}");
            }
            let _ = writeln!(s, "theta_hat {:?}{}", fit.theta_hat, if fit.boundary { "  (boundary)" } else { "" });
            let _ = writeln!(
                s,
                "sigma2 reml {:.6}  mle {:.6}  residual loglik {:.6}",
                fit.sigma2_reml, fit.sigma2_mle, fit.resid_loglik
            );
            for e in &f.criteria {
                let _ = writeln!(s, "  {:>9}  {}", e.kind.as_str(), fmt_opt(e.value));
            }
        }
        Payload::Selection(r) => {
            let _ = writeln!(s, "n = {}  p = {}  family = {}  candidates = {}", r.n, r.p, r.family, r.rows.len());
            for w in &r.winners {
                let names: Vec<&str> = w.model.indices().iter().map(|&j| r.columns[j].as_str()).collect();
                let _ = writeln!(s, "  {:>9}  {:<14} {:>14.4}  [{}]", w.kind.as_str(), w.model.to_string(), w.value, names.join(", "));
            }
            let kinds: Vec<_> = r.winners.iter().map(|w| w.kind).collect();
            let _ = write!(s, "\n{:<18}", "model");
            for k in &kinds {
                let _ = write!(s, "{:>12}", k.as_str());
            }
            let _ = writeln!(s);
            for row in &r.rows {
                let _ = write!(s, "{:<18}", row.model.to_string());
                if let Some(reason) = &row.skipped {
                    let _ = writeln!(s, "  skipped: {reason}");
                    continue;
                }
                for k in &kinds {
                    let _ = write!(s, "{:>12}", fmt_opt(row.value(*k)));
                }
                let _ = writeln!(s);
            }
        }
        Payload::Experiment(e) | Payload::Identities(e) => {
            if !e.rates.is_empty() {
                let _ = writeln!(s, "{:>6} {:>9} {:>7} {:>7} {:>7} {:>7} {:>7}", "n", "criterion", "true", "full", "over", "under", "mean_k");
                for r in &e.rates {
                    let _ = writeln!(
                        s,
                        "{:>6} {:>9} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
                        r.n, r.kind.as_str(), r.true_rate, r.full_rate, r.overfit_rate, r.underfit_rate, r.mean_k
                    );
                }
            }
            for c in &e.identities {
                let _ = writeln!(
                    s,
                    "{:<16} n={} k={}  target {:.6}  mean {:.6} +- {:.6}  ({} reps){}",
                    c.name, c.n, c.k, c.target, c.mean, c.std_error, c.replications,
                    if c.flagged { "  FLAGGED" } else { "" }
                );
            }
            for d in &e.distributions {
                let _ = writeln!(
                    s,
                    "{:<18} vs {:<10} KS D = {:.5}  p = {:.4}  ({} samples)",
                    d.name, d.reference, d.statistic, d.p_value, d.samples
                );
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{IdentityCheck, RateRow};
    use crate::criteria::CriterionKind;
    use proptest::prelude::*;

    fn doc_with(values: &[f64]) -> ReportDocument {
        let rates = values
            .iter()
            .enumerate()
            .map(|(i, &v)| RateRow {
                n: 10 + i,
                kind: CriterionKind::ALL[i % 6],
                replications: 3,
                true_rate: v,
                full_rate: -v,
                overfit_rate: v * 1e-300,
                underfit_rate: v * 1e300,
                mean_k: v / 3.0,
            })
            .collect();
        let identities = values
            .iter()
            .map(|&v| IdentityCheck {
                name: "x".into(),
                n: 20,
                k: 2,
                target: 20.25,
                mean: v,
                std_error: v.abs(),
                replications: 7,
                flagged: v > 0.0,
            })
            .collect();
        ReportDocument::new(
            vec!["simulate".into()],
            "00".into(),
            Payload::Experiment(ExperimentSummary { rates, identities, distributions: vec![] }),
            12,
        )
    }

    #[test]
    fn reals_use_seventeen_digits() {
        let s = to_json(&0.1f64).unwrap();
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(to_json(&2.0f64).unwrap(), "2.0000000000000000e0");
        assert_eq!(to_json(&3u64).unwrap(), "3");
    }

    proptest! {
        #[test]
        fn report_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 0..8)) {
            let doc = doc_with(&values);
            let text = to_json(&doc).unwrap();
            let back = from_json(&text).unwrap();
            prop_assert_eq!(back, doc);
        }

        #[test]
        fn bits_survive(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = serde_json::from_str(&to_json(&v).unwrap()).unwrap();
            prop_assert_eq!(back.to_bits() == v.to_bits() || (v == 0.0 && back == 0.0), true);
        }
    }
}
