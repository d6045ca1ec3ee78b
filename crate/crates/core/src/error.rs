use std::path::PathBuf;

/// Errors raised anywhere in the estimation toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Pitch too close to ±90° for the Euler-angle kinematics.
    #[error("singular attitude: |theta| = {theta:.6} rad exceeds guard {limit:.6} rad")]
    SingularAttitude { theta: f64, limit: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("maneuver segment {index}: {source}")]
    Segment {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("covariance trace {trace:.3e} exceeds ceiling {ceiling:.3e}")]
    CovarianceBlowup { trace: f64, ceiling: f64 },

    #[error("covariance lost positive definiteness (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("non-monotonic time at index {index}: {prev} -> {next}")]
    NonMonotonicTime { index: usize, prev: f64, next: f64 },

    #[error("time gap of {gap:.4} s at index {index} exceeds {max:.4} s")]
    TimeGap { index: usize, gap: f64, max: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient excitation: sum of squared velocity {sum_v2:.4} below {threshold}")]
    InsufficientExcitation { sum_v2: f64, threshold: f64 },

    #[error("too few overlapping samples: {count} (need {required})")]
    TooFewSamples { count: usize, required: usize },

    #[error("time ranges do not overlap sufficiently: {0}")]
    NoOverlap(String),

    #[error("missing estimate variance for channel {0}")]
    MissingVariance(&'static str),

    #[error("accelerometer magnitude {magnitude:.4} m/s^2 too small for a gravity reference")]
    LowMagnitude { magnitude: f64 },

    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: line {line}: unknown key `{key}`")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },

    #[error("{path}: missing required key `{key}`")]
    MissingKey { path: PathBuf, key: String },

    #[error("{path}: `{key}` must be strictly positive, got {value}")]
    NonPositive {
        path: PathBuf,
        key: String,
        value: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes, used by the command line driver to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or configuration.
    Data,
    /// A numerical failure inside a simulation or filter.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Segment { source, .. } | Error::AtSample { source, .. } => source.kind(),
            Error::SingularAttitude { .. }
            | Error::CovarianceBlowup { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::SingularInnovation => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
