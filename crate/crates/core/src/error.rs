use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite ({context}) even after jitter escalation")]
    NotPositiveDefinite { context: &'static str },

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("empty index range")]
    EmptyRange,

    #[error("range {start}..{end} out of bounds for horizon {horizon}")]
    OutOfBounds { start: usize, end: usize, horizon: usize },

    #[error("every component has zero likelihood for the observations")]
    AllComponentsDegenerate,

    #[error("update time {t_prime} invalid for horizon {horizon}")]
    InvalidUpdateTime { t_prime: usize, horizon: usize },

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("sample count must be at least 1")]
    InvalidSampleCount,

    #[error("invalid quantile levels: {0}")]
    InvalidLevels(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("covariance references unknown dictionary '{0}'")]
    DanglingDictionaryRef(String),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("duplicate instance id '{0}'")]
    DuplicateId(String),

    #[error("unknown instance id '{0}'")]
    UnknownInstance(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Broad failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotPositiveDefinite { .. } | Error::NonFiniteInput(_) | Error::AllComponentsDegenerate => {
                ErrorClass::Numerical
            }
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::VersionMismatch { .. }
            | Error::DanglingDictionaryRef(_)
            | Error::RaggedRow { .. }
            | Error::DuplicateId(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
