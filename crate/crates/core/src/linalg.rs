//! Dense symmetric positive definite algebra.
//!
//! Everything here works on small dense `nalgebra` matrices: Cholesky with an
//! explicit pivot threshold, log-determinants, triangular solves and the
//! least-squares projection used to form `q = y'(W^-1 - H)y` on whitened data.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check in [`spd_factorize`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Pivot threshold relative to the largest diagonal entry.
pub const PIVOT_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `M = L L'` with its cached log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    log_det: f64,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// `log |M|`; zero for the 0x0 matrix.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solves `L x = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lower[(i, j)] * b[j];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `L' x = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lower[(j, i)] * b[j];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// `L^-1 b`.
    pub fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = b.clone();
        self.forward_in_place(out.as_mut_slice());
        out
    }

    /// `L^-1 B`, column by column.
    pub fn forward_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        for mut col in out.column_iter_mut() {
            self.forward_in_place(col.as_mut_slice());
        }
        out
    }

    /// `M^-1 b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = b.clone();
        self.forward_in_place(out.as_mut_slice());
        self.backward_in_place(out.as_mut_slice());
        out
    }

    /// `M^-1 B` for a block of right-hand sides.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        for mut col in out.column_iter_mut() {
            self.forward_in_place(col.as_mut_slice());
            self.backward_in_place(col.as_mut_slice());
        }
        out
    }

    /// `L L'`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Rejects matrices that are asymmetric beyond [`SYMMETRY_TOL`] (relative to
/// the largest absolute entry) and any pivot at or below
/// `PIVOT_TOL * max_i M[i, i]`.
pub fn spd_factorize(m: &DMatrix<f64>) -> Result<SpdFactor> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(SpdFactor {
            lower: DMatrix::zeros(0, 0),
            log_det: 0.0,
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSpd("matrix has non-finite entries".into()));
    }

    let scale = m.amax();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSpd(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let max_diag = (0..n).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    if max_diag <= 0.0 {
        return Err(Error::NotSpd("non-positive diagonal".into()));
    }
    let threshold = PIVOT_TOL * max_diag;

    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut log_det = 0.0;
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for s in 0..j {
            pivot -= l[(j, s)] * l[(j, s)];
        }
        if pivot <= threshold {
            return Err(Error::NotSpd(format!(
                "pivot {pivot:.3e} at column {j} is below {threshold:.3e}"
            )));
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        log_det += pivot.ln();
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for t in 0..j {
                s -= l[(i, t)] * l[(j, t)];
            }
            l[(i, j)] = s / d;
        }
    }

    Ok(SpdFactor { lower: l, log_det })
}

/// Least-squares projection onto the columns of a (whitened) design.
///
/// Holds the Cholesky factor of `X'X`; residuals are formed explicitly as
/// `v - X (X'X)^-1 X'v` so near-perfect fits keep their relative accuracy.
#[derive(Debug, Clone)]
pub struct Projection {
    design: DMatrix<f64>,
    gram: SpdFactor,
}

impl Projection {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        let gram = spd_factorize(&design.tr_mul(&design))?;
        Ok(Self { design, gram })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn rank(&self) -> usize {
        self.design.ncols()
    }

    /// `log |X'X|`.
    pub fn log_det_gram(&self) -> f64 {
        self.gram.log_det()
    }

    /// Least-squares coefficients of `v` on the design.
    pub fn coefficients(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(0);
        }
        self.gram.solve(&self.design.tr_mul(v))
    }

    pub fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return v.clone();
        }
        v - &self.design * self.coefficients(v)
    }

    /// Residual sum of squares `v'(I - P)v`.
    pub fn residual_ss(&self, v: &DVector<f64>) -> f64 {
        self.residual(v).norm_squared()
    }

    /// `tr{(I - P) C C'}`, i.e. the summed residual sum of squares of the
    /// columns of `C`.
    pub fn residual_trace(&self, c: &DMatrix<f64>) -> f64 {
        if self.rank() == 0 {
            return c.norm_squared();
        }
        let coef = self.gram.solve_mat(&self.design.tr_mul(c));
        (c - &self.design * coef).norm_squared()
    }
}
