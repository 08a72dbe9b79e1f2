//! Covariance representations of mixture components.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, CholeskyFactor};

/// Symmetry tolerance for dense covariances.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A `T × V` pattern dictionary shared by every PDCC component of a forecast,
/// together with the ridge added after composition.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDictionary {
    id: String,
    patterns: DMatrix<f64>,
    ridge: f64,
}

impl PatternDictionary {
    pub fn new(id: impl Into<String>, patterns: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let (t, v) = patterns.shape();
        if v < t {
            return Err(Error::InvalidCovariance(format!(
                "dictionary has {v} patterns for horizon {t}; need at least {t}"
            )));
        }
        if patterns.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput("pattern dictionary"));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::InvalidCovariance(format!(
                "ridge must be finite and non-negative, got {ridge}"
            )));
        }
        Ok(Self {
            id: id.into(),
            patterns,
            ridge,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn patterns(&self) -> &DMatrix<f64> {
        &self.patterns
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn horizon(&self) -> usize {
        self.patterns.nrows()
    }

    pub fn size(&self) -> usize {
        self.patterns.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// `diag(sigma)²`.
    Diagonal {
        sigma: Vec<f64>,
    },
    /// `U diag(aux_sigma)² Uᵀ + ξ I` with `U` and `ξ` from the dictionary.
    Pdcc {
        dictionary: Arc<PatternDictionary>,
        aux_sigma: Vec<f64>,
    },
    Dense {
        matrix: DMatrix<f64>,
    },
}

impl CovarianceSpec {
    pub fn diagonal(sigma: Vec<f64>) -> Result<Self> {
        let spec = CovarianceSpec::Diagonal { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pdcc(dictionary: Arc<PatternDictionary>, aux_sigma: Vec<f64>) -> Result<Self> {
        let spec = CovarianceSpec::Pdcc { dictionary, aux_sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let spec = CovarianceSpec::Dense { matrix };
        spec.validate()?;
        Ok(spec)
    }

    /// Horizon the covariance is defined over.
    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Diagonal { sigma } => sigma.len(),
            CovarianceSpec::Pdcc { dictionary, .. } => dictionary.horizon(),
            CovarianceSpec::Dense { matrix } => matrix.nrows(),
        }
    }

    pub fn dictionary(&self) -> Option<&Arc<PatternDictionary>> {
        match self {
            CovarianceSpec::Pdcc { dictionary, .. } => Some(dictionary),
            _ => None,
        }
    }

    /// Checks the structural invariants. Dense matrices are additionally
    /// required to factorize (with jitter if needed).
    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceSpec::Diagonal { sigma } => {
                if sigma.is_empty() {
                    return Err(Error::InvalidCovariance("empty sigma".into()));
                }
                check_positive(sigma, "sigma")
            }
            CovarianceSpec::Pdcc { dictionary, aux_sigma } => {
                if aux_sigma.len() != dictionary.size() {
                    return Err(Error::DimensionMismatch {
                        context: "pdcc aux_sigma vs dictionary columns",
                        expected: dictionary.size(),
                        found: aux_sigma.len(),
                    });
                }
                if dictionary.ridge() <= 0.0 {
                    return Err(Error::InvalidCovariance("pdcc ridge must be strictly positive".into()));
                }
                check_positive(aux_sigma, "aux_sigma")
            }
            CovarianceSpec::Dense { matrix } => {
                if !matrix.is_square() || matrix.nrows() == 0 {
                    return Err(Error::InvalidCovariance(format!(
                        "dense covariance must be square and non-empty, got {}x{}",
                        matrix.nrows(),
                        matrix.ncols()
                    )));
                }
                if matrix.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteInput("dense covariance"));
                }
                let asym = max_asymmetry(matrix);
                if asym > SYMMETRY_TOL {
                    return Err(Error::InvalidCovariance(format!(
                        "dense covariance asymmetric by {asym:e}"
                    )));
                }
                CholeskyFactor::new(matrix, "dense covariance").map(|_| ())
            }
        }
    }

    /// The full symmetric `T × T` matrix.
    pub fn materialize(&self) -> DMatrix<f64> {
        match self {
            CovarianceSpec::Diagonal { sigma } => {
                DMatrix::from_diagonal(&sigma.iter().map(|s| s * s).collect::<Vec<_>>().into())
            }
            CovarianceSpec::Pdcc { dictionary, aux_sigma } => {
                let u = dictionary.patterns();
                let t = u.nrows();
                let mut scaled = u.clone();
                for (j, s) in aux_sigma.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(*s);
                }
                let mut out = &scaled * scaled.transpose();
                for i in 0..t {
                    out[(i, i)] += dictionary.ridge();
                }
                crate::linalg::symmetrize(&mut out);
                out
            }
            CovarianceSpec::Dense { matrix } => matrix.clone(),
        }
    }

    /// Restricts to `start..end` (0-based, half-open). Diagonal stays
    /// diagonal; PDCC and dense become dense blocks.
    pub fn restrict(&self, start: usize, end: usize) -> CovarianceSpec {
        match self {
            CovarianceSpec::Diagonal { sigma } => CovarianceSpec::Diagonal {
                sigma: sigma[start..end].to_vec(),
            },
            _ => {
                let full = self.materialize();
                CovarianceSpec::Dense {
                    matrix: full.view((start, start), (end - start, end - start)).into_owned(),
                }
            }
        }
    }
}

fn check_positive(values: &[f64], what: &'static str) -> Result<()> {
    if let Some(bad) = values.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidCovariance(format!(
            "{what} entries must be finite and > 0, got {bad}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(rows: usize, cols: usize, data: &[f64], ridge: f64) -> Arc<PatternDictionary> {
        Arc::new(PatternDictionary::new("u", DMatrix::from_row_slice(rows, cols, data), ridge).unwrap())
    }

    #[test]
    fn pdcc_with_identity_dictionary() {
        let spec = CovarianceSpec::pdcc(dict(2, 2, &[1.0, 0.0, 0.0, 1.0], 0.1), vec![1.0, 2.0]).unwrap();
        let m = spec.materialize();
        let expect = DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 4.1]);
        assert!((m - expect).abs().max() < 1e-15);
    }

    #[test]
    fn diagonal_squares_sigma() {
        let spec = CovarianceSpec::diagonal(vec![3.0]).unwrap();
        assert_eq!(spec.materialize(), DMatrix::from_row_slice(1, 1, &[9.0]));
    }

    #[test]
    fn pdcc_hand_product_without_ridge() {
        // Construct directly: the validating constructor requires ξ > 0.
        let spec = CovarianceSpec::Pdcc {
            dictionary: dict(2, 2, &[1.0, 1.0, 1.0, -1.0], 0.0),
            aux_sigma: vec![1.0, 1.0],
        };
        let m = spec.materialize();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn dictionary_needs_at_least_t_patterns() {
        let r = PatternDictionary::new("u", DMatrix::zeros(3, 2), 0.1);
        assert!(matches!(r, Err(Error::InvalidCovariance(_))));
    }

    #[test]
    fn pdcc_aux_sigma_length_checked() {
        let r = CovarianceSpec::pdcc(dict(2, 2, &[1.0, 0.0, 0.0, 1.0], 0.1), vec![1.0]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn diagonal_rejects_non_positive_sigma() {
        assert!(CovarianceSpec::diagonal(vec![1.0, 0.0]).is_err());
        assert!(CovarianceSpec::diagonal(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn dense_rejects_asymmetry_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(CovarianceSpec::dense(asym), Err(Error::InvalidCovariance(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CovarianceSpec::dense(indef),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn restrict_keeps_block() {
        let spec = CovarianceSpec::dense(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0])).unwrap();
        assert_eq!(spec.restrict(0, 1).materialize(), DMatrix::from_row_slice(1, 1, &[4.0]));
        let diag = CovarianceSpec::diagonal(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(diag.restrict(2, 3), CovarianceSpec::Diagonal { sigma: vec![3.0] });
    }
}
