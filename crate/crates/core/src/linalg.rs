//! Dense Cholesky factorization with a jitter fallback, plus the triangular
//! helpers the mixture algebra is built on.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// First diagonal jitter tried when a plain factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower Cholesky factor `L` of a symmetric positive-definite matrix,
/// `A + jitter * I = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    jitter: f64,
}

impl CholeskyFactor {
    /// Factorizes `a`, escalating diagonal jitter from 1e-10 by ×10 up to 1e-4.
    pub fn new(a: &DMatrix<f64>, context: &'static str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context,
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(context));
        }
        if let Some(ch) = Cholesky::new(a.clone()) {
            return Ok(Self::from_chol(ch, 0.0));
        }
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * (1.0 + 1e-9) {
            let mut shifted = a.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::new(shifted) {
                return Ok(Self::from_chol(ch, jitter));
            }
            jitter *= 10.0;
        }
        Err(Error::NotPositiveDefinite { context })
    }

    fn from_chol(ch: Cholesky<f64, Dyn>, jitter: f64) -> Self {
        Self {
            lower: ch.unpack(),
            jitter,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Diagonal jitter that was needed to factorize (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L y = b` for a vector.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("cholesky factor has a non-zero diagonal")
    }

    /// Solves `L Y = B` for a matrix right-hand side.
    pub fn solve_lower_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("cholesky factor has a non-zero diagonal")
    }

    /// Gaussian log-density of a residual `x - μ` under covariance `L Lᵀ`.
    pub fn gaussian_log_density(&self, residual: &DVector<f64>) -> f64 {
        let white = self.solve_lower(residual);
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det() + white.norm_squared())
    }

    /// `L z`, used to colour standard-normal draws.
    pub fn colour(&self, z: &[f64]) -> DVector<f64> {
        let n = self.dim();
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.lower[(i, j)] * zj;
            }
            out[i] = acc;
        }
        out
    }
}

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
