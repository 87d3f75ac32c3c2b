use thiserror::Error;

use crate::correlation::CorrelationFamily;
use crate::criteria::CriterionKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid correlation: {family} with theta {theta:?} is outside its validity region for n = {n}")]
    InvalidCorrelation {
        family: CorrelationFamily,
        theta: Vec<f64>,
        n: usize,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("perfect fit for model {model}: residual quadratic form is zero, criteria are undefined")]
    PerfectFit { model: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("criterion {kind} is undefined at n = {n}, k = {k} (needs n - k - 2 > 0)")]
    UndefinedCriterion { kind: CriterionKind, n: usize, k: usize },

    #[error("exhaustive enumeration over p = {p} covariates is too large (limit 25); restrict --max-k and the forced set or drop covariates")]
    TooLarge { p: usize },

    #[error("no feasible candidate for criterion {kind}")]
    EmptyWinner { kind: CriterionKind },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column: {0}")]
    MissingColumn(String),

    #[error("duplicate column header: {0}")]
    DuplicateHeader(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replication {index} failed: {message}")]
    Replication { index: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
