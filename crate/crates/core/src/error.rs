//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory too short: {got} samples, need at least {need}")]
    TrajectoryTooShort { got: usize, need: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("series too short: {got} samples, need at least {need} for {context}")]
    SeriesTooShort {
        got: usize,
        need: usize,
        context: String,
    },

    #[error("length mismatch: {left} vs {right} in {context}")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: String,
    },

    #[error("band {band} extends to {hi_hz} Hz, at or above Nyquist {nyquist_hz} Hz")]
    BandAboveNyquist {
        band: String,
        hi_hz: f64,
        nyquist_hz: f64,
    },

    #[error("unknown channel label: {0}")]
    UnknownChannel(String),

    #[error("unknown artifact-removal strategy: {0}")]
    UnknownStrategy(String),

    #[error("trial {trial_id}: window [{start}, {end}) exceeds recording length {len}")]
    WindowOutOfBounds {
        trial_id: u64,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("inconsistent channel layout: {0}")]
    InconsistentLayout(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("matrix is rank deficient (non-positive pivot at column {column}); a positive ridge penalty is required")]
    RankDeficient { column: usize },

    #[error("covariance is not positive definite (failed at column {column})")]
    NotPositiveDefinite { column: usize },

    #[error("p-value {value} outside (0, 1]")]
    PValueOutOfRange { value: f64 },

    #[error("too few subjects: {got}, need at least {need}")]
    TooFewSubjects { got: usize, need: usize },

    #[error("subject {subject}: {trials} trials, need more than {k_update} update trials")]
    TooFewTrials {
        subject: String,
        trials: usize,
        k_update: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Broad error category used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed input data, files, or domain-type invariant violations.
    Data,
    /// Numerical failure (rank deficiency, loss of positive definiteness).
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::RankDeficient { .. } | Error::NotPositiveDefinite { .. } => {
                ErrorCategory::Numerical
            }
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
