//! Data generation and Monte-Carlo experiments.
//!
//! Randomness is addressed by `(seed, n, replication)` through
//! [`crate::rng`], and per-replication results are gathered in replication
//! order before any aggregation, so summaries are bit-identical for every
//! worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::correlation::CorrelationFamily;
use crate::criteria::CriterionKind;
use crate::data::{CandidateModel, Dataset, Population, TrueModelSpec};
use crate::error::{Error, Result};
use crate::fit::PERFECT_FIT_TOL;
use crate::oracle::expectation_identities;
use crate::projector::WhitenedFit;
use crate::selection::{enumerate_candidates, select, MAX_ENUMERATION_P};
use crate::stats::{ks_test, MeanVar};

/// Draws one dataset from the truth at sample size `n`.
pub fn sample_dgp(truth: &TrueModelSpec, n: usize, seed: u64, replication: u64) -> Result<Dataset> {
    truth.at(n)?.sample(seed, replication)
}

/// Runs `f` on a dedicated rayon pool with `workers` threads.
pub fn with_workers<R, F>(workers: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub truth: TrueModelSpec,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub criteria: Vec<CriterionKind>,
    #[serde(default = "default_family")]
    pub fit_family: CorrelationFamily,
    #[serde(default)]
    pub seed: u64,
    /// One-based indices present in every candidate.
    #[serde(default)]
    pub forced: CandidateModel,
    /// Largest candidate size; defaults to `p`.
    #[serde(default)]
    pub max_k: Option<usize>,
}

fn default_family() -> CorrelationFamily {
    CorrelationFamily::Identity
}

impl ExperimentConfig {
    pub fn max_k(&self) -> usize {
        self.max_k.unwrap_or(self.truth.p())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("n_values must not be empty".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::Config("criteria must not be empty".into()));
        }
        self.truth.validate()?;
        let p = self.truth.p();
        if p > MAX_ENUMERATION_P {
            return Err(Error::TooLarge { p });
        }
        let max_k = self.max_k();
        if max_k > p {
            return Err(Error::Config(format!("max_k = {max_k} exceeds p = {p}")));
        }
        self.forced
            .check_range(p)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.forced.k() > max_k {
            return Err(Error::Config("forced set is larger than max_k".into()));
        }
        for &n in &self.n_values {
            if n < max_k + 3 {
                return Err(Error::Config(format!(
                    "n = {n} needs n - max_k - 2 > 0 (max_k = {max_k})"
                )));
            }
            self.truth
                .correlation
                .validate(n)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Selection behaviour of one criterion at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub kind: CriterionKind,
    pub replications: usize,
    pub true_rate: f64,
    pub full_rate: f64,
    /// Strict supersets of the true active set.
    pub overfit_rate: f64,
    /// Models missing at least one truly active index.
    pub underfit_rate: f64,
    pub mean_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub target: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Target outside `mean +- 3 SE`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub name: String,
    pub reference: String,
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    #[serde(default)]
    pub rates: Vec<RateRow>,
    #[serde(default)]
    pub identities: Vec<IdentityCheck>,
    #[serde(default)]
    pub distributions: Vec<DistributionCheck>,
}

impl ExperimentSummary {
    pub fn rate(&self, n: usize, kind: CriterionKind) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.n == n && r.kind == kind)
    }

    pub fn identity(&self, name: &str) -> Option<&IdentityCheck> {
        self.identities.iter().find(|c| c.name == name)
    }

    pub fn distribution(&self, name: &str) -> Option<&DistributionCheck> {
        self.distributions.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    True,
    Overfit,
    Underfit,
}

fn classify(selected: &CandidateModel, truth: &CandidateModel) -> Outcome {
    if !selected.is_superset_of(truth) {
        Outcome::Underfit
    } else if selected.k() == truth.k() {
        Outcome::True
    } else {
        Outcome::Overfit
    }
}

/// Samples, selects and tallies for every `n` and replication.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentSummary> {
    config.validate()?;
    with_workers(workers, || run_experiment_in_pool(config))?
}

fn run_experiment_in_pool(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let p = config.truth.p();
    let truth_set = config.truth.active_set();
    let candidates = enumerate_candidates(p, &config.forced, config.max_k())?;
    let mut rates = Vec::new();

    for &n in &config.n_values {
        let pop = config.truth.at(n)?;
        let per_rep: Vec<Result<Vec<CandidateModel>>> = (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let data = pop.sample(config.seed, r as u64)?;
                let report = select(&data, config.fit_family, &candidates, &config.criteria)?;
                Ok(config
                    .criteria
                    .iter()
                    .map(|&kind| report.winner(kind).map(|w| w.model.clone()))
                    .collect::<Option<Vec<_>>>()
                    .expect("select returns a winner for every requested kind"))
            })
            .collect();

        let mut counts = vec![[0usize; 4]; config.criteria.len()];
        let mut k_sums = vec![0usize; config.criteria.len()];
        for (r, outcome) in per_rep.into_iter().enumerate() {
            let winners = outcome.map_err(|e| Error::Replication {
                index: r,
                message: format!("n = {n}: {e}"),
            })?;
            for (ci, model) in winners.iter().enumerate() {
                let slot = match classify(model, &truth_set) {
                    Outcome::True => 0,
                    Outcome::Overfit => 1,
                    Outcome::Underfit => 2,
                };
                counts[ci][slot] += 1;
                if model.k() == p {
                    counts[ci][3] += 1;
                }
                k_sums[ci] += model.k();
            }
        }

        let reps = config.replications as f64;
        for (ci, &kind) in config.criteria.iter().enumerate() {
            let c = counts[ci];
            rates.push(RateRow {
                n,
                kind,
                replications: config.replications,
                true_rate: c[0] as f64 / reps,
                overfit_rate: c[1] as f64 / reps,
                underfit_rate: c[2] as f64 / reps,
                full_rate: c[3] as f64 / reps,
                mean_k: k_sums[ci] as f64 / reps,
            });
        }
    }

    Ok(ExperimentSummary {
        rates,
        ..Default::default()
    })
}

/// Settings for the moment and distribution checks.
///
/// The fitting model must contain the true active set, and the known
/// correlation of the truth is used for fitting (no theta estimation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub truth: TrueModelSpec,
    pub n: usize,
    pub model: CandidateModel,
    pub replications: usize,
    /// Leading replications used for the KS tests.
    pub ks_replications: usize,
    pub seed: u64,
}

impl IdentityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        self.truth.validate()?;
        self.model
            .check_range(self.truth.p())
            .map_err(|e| Error::Config(e.to_string()))?;
        if !self.model.is_superset_of(&self.truth.active_set()) {
            return Err(Error::Config(format!(
                "fitting model {} must contain the true active set {}",
                self.model,
                self.truth.active_set()
            )));
        }
        if self.n < self.model.k() + 3 {
            return Err(Error::Config(format!(
                "n = {} needs n - k - 2 > 0 for k = {}",
                self.n,
                self.model.k()
            )));
        }
        self.truth
            .correlation
            .validate(self.n)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Per-replication statistics of the identity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySample {
    /// `(n - k) sigma0^2 / sigma2_hat`; equals the trace term
    /// `tr{(W^-1 - H) W0} sigma0^2 / sigma2_hat` when `W = W0`.
    pub chi2_ratio: f64,
    /// `(X b_hat - X b0)' W^-1 (X b_hat - X b0) / sigma2_hat`.
    pub quadform: f64,
    /// `(n - k) sigma2_hat / sigma0^2`, chi-square with `n - k` df.
    pub chi2_stat: f64,
}

/// Draws replication `r` and computes its identity statistics.
pub fn identity_sample(pop: &Population, model: &CandidateModel, seed: u64, replication: u64) -> Result<IdentitySample> {
    let data = pop.sample(seed, replication)?;
    let fit = WhitenedFit::new(&data, model, pop.factor())?;
    if fit.q <= PERFECT_FIT_TOL * fit.total || fit.q <= 0.0 {
        return Err(Error::PerfectFit {
            model: model.to_string(),
        });
    }
    let n = pop.n();
    let k = model.k();
    let df = (n - k) as f64;
    let sigma2_hat = fit.q / df;
    let beta0_active = pop.beta0().select_rows(model.indices());
    let shift = fit.projection.design() * (&fit.beta - beta0_active);
    let sigma0_sq = pop.sigma0_sq();
    Ok(IdentitySample {
        chi2_ratio: df * sigma0_sq / sigma2_hat,
        quadform: shift.norm_squared() / sigma2_hat,
        chi2_stat: df * sigma2_hat / sigma0_sq,
    })
}

pub const CHI2_RATIO: &str = "chi2_ratio_mean";
pub const QUADFORM: &str = "quadform_mean";
pub const CHI2_KS: &str = "chi2_distribution";
pub const F_KS: &str = "f_distribution";

/// Monte-Carlo check of the two moment identities and KS checks of the
/// chi-square and F distributions.
pub fn verify_identities(config: &IdentityConfig, workers: usize) -> Result<ExperimentSummary> {
    config.validate()?;
    let pop = config.truth.at(config.n)?;
    let model = &config.model;
    let samples: Vec<Result<IdentitySample>> = with_workers(workers, || {
        (0..config.replications)
            .into_par_iter()
            .map(|r| identity_sample(&pop, model, config.seed, r as u64))
            .collect()
    })?;
    let mut values = Vec::with_capacity(samples.len());
    for (r, s) in samples.into_iter().enumerate() {
        values.push(s.map_err(|e| Error::Replication {
            index: r,
            message: e.to_string(),
        })?);
    }

    let n = config.n;
    let k = model.k();
    let targets = expectation_identities(n, k)?;
    let check = |name: &str, target: f64, stats: MeanVar| {
        let flagged = (stats.mean() - target).abs() > 3.0 * stats.std_error();
        IdentityCheck {
            name: name.to_string(),
            n,
            k,
            target,
            mean: stats.mean(),
            std_error: stats.std_error(),
            replications: stats.count(),
            flagged,
        }
    };
    let mut identities = vec![check(
        CHI2_RATIO,
        targets.chi2_ratio_mean,
        values.iter().map(|s| s.chi2_ratio).collect(),
    )];
    if k > 0 {
        identities.push(check(
            QUADFORM,
            targets.quadform_mean,
            values.iter().map(|s| s.quadform).collect(),
        ));
    }

    let ks_n = config.ks_replications.min(values.len());
    let head = &values[..ks_n];
    let df = (n - k) as f64;
    let chi2 = ChiSquared::new(df).map_err(|e| Error::Domain(e.to_string()))?;
    let chi2_values: Vec<f64> = head.iter().map(|s| s.chi2_stat).collect();
    let chi2_ks = ks_test(&chi2_values, |x| chi2.cdf(x));
    let mut distributions = vec![DistributionCheck {
        name: CHI2_KS.into(),
        reference: format!("chi2({})", n - k),
        statistic: chi2_ks.statistic,
        p_value: chi2_ks.p_value,
        samples: chi2_ks.samples,
    }];
    if k > 0 {
        let f = FisherSnedecor::new(k as f64, df).map_err(|e| Error::Domain(e.to_string()))?;
        let f_values: Vec<f64> = head.iter().map(|s| s.quadform / k as f64).collect();
        let f_ks = ks_test(&f_values, |x| f.cdf(x));
        distributions.push(DistributionCheck {
            name: F_KS.into(),
            reference: format!("F({k}, {})", n - k),
            statistic: f_ks.statistic,
            p_value: f_ks.p_value,
            samples: f_ks.samples,
        });
    }

    Ok(ExperimentSummary {
        rates: Vec::new(),
        identities,
        distributions,
    })
}
