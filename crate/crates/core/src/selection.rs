//! Exhaustive candidate enumeration and per-criterion selection.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationFamily;
use crate::criteria::{evaluate_criterion, CriterionKind};
use crate::data::{CandidateModel, Dataset};
use crate::error::{Error, Result};
use crate::fit::{profile_reml, FittedModel};

/// Largest `p` accepted for exhaustive enumeration.
pub const MAX_ENUMERATION_P: usize = 25;

/// All subsets of `{0..p}` containing `forced` with at most `max_k` members,
/// ordered by size and then lexicographically.
pub fn enumerate_candidates(p: usize, forced: &CandidateModel, max_k: usize) -> Result<Vec<CandidateModel>> {
    if p > MAX_ENUMERATION_P {
        return Err(Error::TooLarge { p });
    }
    forced.check_range(p)?;
    if max_k > p {
        return Err(Error::InvalidArgument(format!("max_k = {max_k} exceeds p = {p}")));
    }
    if forced.k() > max_k {
        return Err(Error::InvalidArgument(format!(
            "forced set {forced} has more than max_k = {max_k} members"
        )));
    }
    let free: Vec<usize> = (0..p).filter(|j| !forced.contains(*j)).collect();
    let mut out = Vec::new();
    for extra in 0..=(max_k - forced.k()) {
        for combo in free.iter().copied().combinations(extra) {
            let mut active = forced.indices().to_vec();
            active.extend(combo);
            out.push(CandidateModel::new(active));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionEntry {
    pub kind: CriterionKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub model: CandidateModel,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<FittedModel>,
    /// Why the candidate could not be fitted.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
    pub criteria: Vec<CriterionEntry>,
}

impl CandidateRow {
    pub fn value(&self, kind: CriterionKind) -> Option<f64> {
        self.criteria
            .iter()
            .find(|e| e.kind == kind)
            .and_then(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub kind: CriterionKind,
    pub model: CandidateModel,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub n: usize,
    pub p: usize,
    pub family: CorrelationFamily,
    pub columns: Vec<String>,
    pub rows: Vec<CandidateRow>,
    pub winners: Vec<Winner>,
}

impl SelectionReport {
    pub fn winner(&self, kind: CriterionKind) -> Option<&Winner> {
        self.winners.iter().find(|w| w.kind == kind)
    }

    pub fn row(&self, model: &CandidateModel) -> Option<&CandidateRow> {
        self.rows.iter().find(|r| &r.model == model)
    }
}

fn evaluate_row(data: &Dataset, family: CorrelationFamily, model: &CandidateModel, kinds: &[CriterionKind]) -> CandidateRow {
    match profile_reml(data, model, family) {
        Ok(fit) => {
            let criteria = kinds
                .iter()
                .map(|&kind| match evaluate_criterion(&fit, kind) {
                    Ok(v) => CriterionEntry {
                        kind,
                        value: Some(v),
                        note: None,
                    },
                    Err(e) => CriterionEntry {
                        kind,
                        value: None,
                        note: Some(e.to_string()),
                    },
                })
                .collect();
            CandidateRow {
                model: model.clone(),
                k: model.k(),
                fit: Some(fit),
                skipped: None,
                criteria,
            }
        }
        Err(e) => {
            let reason = e.to_string();
            CandidateRow {
                model: model.clone(),
                k: model.k(),
                fit: None,
                skipped: Some(reason.clone()),
                criteria: kinds
                    .iter()
                    .map(|&kind| CriterionEntry {
                        kind,
                        value: None,
                        note: Some(reason.clone()),
                    })
                    .collect(),
            }
        }
    }
}

/// Minimum per criterion; exact ties go to the smaller model, then to the
/// lexicographically smaller index set.
pub fn pick_winners(rows: &[CandidateRow], kinds: &[CriterionKind]) -> Result<Vec<Winner>> {
    kinds
        .iter()
        .map(|&kind| {
            rows.iter()
                .filter_map(|r| r.value(kind).map(|v| (v, &r.model)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
                .map(|(value, model)| Winner {
                    kind,
                    model: model.clone(),
                    value,
                })
                .ok_or(Error::EmptyWinner { kind })
        })
        .collect()
}

/// Fits every candidate by profile REML and picks a winner per criterion.
///
/// Infeasible candidates are kept as rows with a reason. Candidates are
/// evaluated in parallel on the current rayon pool; the report is identical
/// for any pool size.
pub fn select(
    data: &Dataset,
    family: CorrelationFamily,
    candidates: &[CandidateModel],
    kinds: &[CriterionKind],
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate models".into()));
    }
    if kinds.is_empty() {
        return Err(Error::InvalidArgument("no criteria requested".into()));
    }
    for m in candidates {
        m.check_range(data.p())?;
    }
    let rows: Vec<CandidateRow> = candidates
        .par_iter()
        .map(|m| evaluate_row(data, family, m, kinds))
        .collect();
    let winners = pick_winners(&rows, kinds)?;
    Ok(SelectionReport {
        n: data.n(),
        p: data.p(),
        family,
        columns: data.names().to_vec(),
        rows,
        winners,
    })
}

/// Winner per criterion, keyed by kind.
pub fn winners_by_kind(report: &SelectionReport) -> BTreeMap<CriterionKind, &CandidateModel> {
    report.winners.iter().map(|w| (w.kind, &w.model)).collect()
}
