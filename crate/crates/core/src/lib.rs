//! Variable selection for Gaussian linear regression with correlated errors
//! using residual-likelihood information criteria.
//!
//! The crate covers GLS/REML fitting under identity, AR(1) and exchangeable
//! correlation, the RIC, RIC*, RICc, AIC, AICc and BIC criteria, exact
//! population Kullback-Leibler scores, exhaustive subset selection, and a
//! reproducible Monte-Carlo engine for checking the moment and distribution
//! identities behind the criteria. A command-line tool, `ric-select`, wraps
//! fitting, selection and simulation and writes versioned JSON reports.

pub mod cli;
pub mod correlation;
pub mod criteria;
pub mod data;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod projector;
pub mod report;
pub mod rng;
pub mod selection;
pub mod simulate;
pub mod stats;

pub use correlation::{build_correlation, CorrelationFamily, CorrelationSpec, Whitener};
pub use criteria::{evaluate_criterion, penalty_decomposition, CriterionKind, PenaltyTable};
pub use data::{CandidateModel, Dataset, DesignSource, Population, TrueModelSpec};
pub use error::{Error, Result};
pub use fit::{full_loglik, gls_fit, profile_reml, residual_loglik, FittedModel, GlsFit};
pub use linalg::{spd_factorize, SpdFactor};
pub use oracle::{
    estimated_divergence, expectation_identities, kl_likelihood, kl_residual,
    population_neg2_loglik, population_neg2_residual_loglik, PopulationScore,
};
pub use report::{ReportDocument, Payload};
pub use projector::{projector_pieces, ProjectorPieces};
pub use selection::{enumerate_candidates, select, SelectionReport};
pub use simulate::{
    run_experiment, sample_dgp, verify_identities, ExperimentConfig, ExperimentSummary,
    IdentityConfig,
};
