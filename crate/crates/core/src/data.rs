//! Datasets, candidate models and the data-generating truth.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::correlation::{CorrelationSpec, Whitener};
use crate::error::{Error, Result};
use crate::rng::{self, StreamId};

/// Response vector and design matrix with column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if n < 1 {
            return Err(Error::InvalidData("dataset needs at least one observation".into()));
        }
        if x.ncols() < 1 {
            return Err(Error::InvalidData("design needs at least one column".into()));
        }
        if x.nrows() != n {
            return Err(Error::Dimension(format!(
                "response has {n} rows but design has {}",
                x.nrows()
            )));
        }
        if names.len() != x.ncols() {
            return Err(Error::Dimension(format!(
                "{} column names for {} design columns",
                names.len(),
                x.ncols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("response has non-finite entries".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design has non-finite entries".into()));
        }
        Ok(Self { y, x, names })
    }

    /// Dataset with generated column names `x1..xp`.
    pub fn unnamed(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let names = default_names(x.ncols());
        Self::new(y, x, names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Columns of the design selected by `model`.
    pub fn active_design(&self, model: &CandidateModel) -> Result<DMatrix<f64>> {
        model.check_range(self.p())?;
        Ok(self.x.select_columns(model.indices()))
    }

    /// Same design, different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(y, self.x.clone(), self.names.clone())
    }

    /// Prepends an all-ones column named `(intercept)`.
    pub fn with_intercept(&self) -> Self {
        let n = self.n();
        let x = self.x.clone().insert_column(0, 1.0);
        debug_assert_eq!(x.nrows(), n);
        let mut names = Vec::with_capacity(self.names.len() + 1);
        names.push("(intercept)".to_string());
        names.extend(self.names.iter().cloned());
        Self {
            y: self.y.clone(),
            x,
            names,
        }
    }

    /// Position of a column by label.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|c| c == name)
    }
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// An active set of design columns.
///
/// Indices are stored zero-based and sorted; they are displayed and
/// serialized one-based, matching column numbering on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CandidateModel {
    active: Vec<usize>,
}

impl CandidateModel {
    /// Sorts and deduplicates zero-based indices.
    pub fn new(mut active: Vec<usize>) -> Self {
        active.sort_unstable();
        active.dedup();
        Self { active }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full(p: usize) -> Self {
        Self {
            active: (0..p).collect(),
        }
    }

    /// From one-based indices as written by users.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidArgument("column indices are one-based".into()));
        }
        Ok(Self::new(indices.iter().map(|i| i - 1).collect()))
    }

    pub fn indices(&self) -> &[usize] {
        &self.active
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.active.iter().map(|i| i + 1).collect()
    }

    pub fn k(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.active.binary_search(&index).is_ok()
    }

    pub fn is_superset_of(&self, other: &CandidateModel) -> bool {
        other.active.iter().all(|i| self.contains(*i))
    }

    pub fn check_range(&self, p: usize) -> Result<()> {
        match self.active.last() {
            Some(&last) if last >= p => Err(Error::Dimension(format!(
                "model {self} references column {} but p = {p}",
                last + 1
            ))),
            _ => Ok(()),
        }
    }
}

impl Ord for CandidateModel {
    /// Smaller models first, then lexicographic index order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.k()
            .cmp(&other.k())
            .then_with(|| self.active.cmp(&other.active))
    }
}

impl PartialOrd for CandidateModel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CandidateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (pos, i) in self.active.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl Serialize for CandidateModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CandidateModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        CandidateModel::from_one_based(&raw).map_err(serde::de::Error::custom)
    }
}

/// How the truth's design matrix is obtained at a given sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignSource {
    /// A stored design; the first `n` rows are used.
    Fixed { rows: Vec<Vec<f64>> },
    /// iid standard normal columns drawn from `seed`, optionally with a
    /// leading all-ones column (counted in `p`).
    Gaussian {
        p: usize,
        #[serde(default)]
        intercept: bool,
        seed: u64,
    },
}

impl DesignSource {
    pub fn fixed(x: &DMatrix<f64>) -> Self {
        DesignSource::Fixed {
            rows: x.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            DesignSource::Fixed { rows } => rows.first().map_or(0, Vec::len),
            DesignSource::Gaussian { p, .. } => *p,
        }
    }

    pub fn has_intercept(&self) -> bool {
        matches!(self, DesignSource::Gaussian { intercept: true, .. })
    }

    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        match self {
            DesignSource::Fixed { rows } => {
                if rows.len() < n {
                    return Err(Error::Dimension(format!(
                        "fixed design has {} rows, {n} requested",
                        rows.len()
                    )));
                }
                let p = self.p();
                if rows.iter().any(|r| r.len() != p) {
                    return Err(Error::InvalidData("fixed design rows have unequal lengths".into()));
                }
                Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
            }
            DesignSource::Gaussian { p, intercept, seed } => {
                let mut rng = rng::stream(*seed, StreamId::Design, *p as u64, n as u64);
                // column-major fill keeps column j's draws independent of later columns
                let mut x = DMatrix::from_fn(n, *p, |_, _| 0.0);
                for j in 0..*p {
                    for i in 0..n {
                        x[(i, j)] = if *intercept && j == 0 {
                            1.0
                        } else {
                            StandardNormal.sample(&mut rng)
                        };
                    }
                }
                Ok(x)
            }
        }
    }
}

/// The data-generating model `y = X beta0 + eps`, `Var eps = sigma0^2 W(theta0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModelSpec {
    pub beta0: Vec<f64>,
    pub sigma0_sq: f64,
    pub correlation: CorrelationSpec,
    pub design: DesignSource,
}

impl TrueModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0_sq.is_finite() && self.sigma0_sq > 0.0) {
            return Err(Error::Config(format!(
                "sigma0_sq must be positive, got {}",
                self.sigma0_sq
            )));
        }
        if self.beta0.is_empty() {
            return Err(Error::Config("beta0 must have at least one entry".into()));
        }
        if self.beta0.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta0 has non-finite entries".into()));
        }
        if self.design.p() != self.beta0.len() {
            return Err(Error::Config(format!(
                "beta0 has {} entries but the design has {} columns",
                self.beta0.len(),
                self.design.p()
            )));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }

    /// Nonzero positions of `beta0`.
    pub fn active_set(&self) -> CandidateModel {
        CandidateModel::new(
            self.beta0
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    /// The truth at sample size `n`: design, mean and error factor.
    pub fn at(&self, n: usize) -> Result<Population> {
        self.validate()?;
        let x = self.design.matrix(n)?;
        let beta0 = DVector::from_column_slice(&self.beta0);
        let mean = &x * &beta0;
        let factor = Whitener::new(&self.correlation, n)?;
        Ok(Population {
            truth: self.clone(),
            x,
            beta0,
            mean,
            factor,
        })
    }
}

/// A [`TrueModelSpec`] instantiated at a fixed sample size.
#[derive(Debug, Clone)]
pub struct Population {
    truth: TrueModelSpec,
    x: DMatrix<f64>,
    beta0: DVector<f64>,
    mean: DVector<f64>,
    factor: Whitener,
}

impl Population {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn truth(&self) -> &TrueModelSpec {
        &self.truth
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn beta0(&self) -> &DVector<f64> {
        &self.beta0
    }

    /// `X beta0`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.truth.sigma0_sq
    }

    pub fn correlation(&self) -> &CorrelationSpec {
        &self.truth.correlation
    }

    /// Factor of `W0`.
    pub fn factor(&self) -> &Whitener {
        &self.factor
    }

    pub fn active_set(&self) -> CandidateModel {
        self.truth.active_set()
    }

    /// Draws `y = X beta0 + sigma0 L0 z` from the noise stream of
    /// `(seed, replication)`.
    pub fn sample_response(&self, seed: u64, replication: u64) -> DVector<f64> {
        let n = self.n();
        let mut rng = rng::stream(seed, StreamId::Noise, n as u64, replication);
        let mut z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        self.factor.color_in_place(z.as_mut_slice());
        let sd = self.sigma0_sq().sqrt();
        z.zip_apply(&self.mean, |e, m| *e = m + sd * *e);
        z
    }

    pub fn sample(&self, seed: u64, replication: u64) -> Result<Dataset> {
        Dataset::unnamed(self.sample_response(seed, replication), self.x.clone())
    }
}
