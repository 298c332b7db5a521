use thiserror::Error;

/// Errors raised by the estimation, quadrature and planning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("starting vector is zero")]
    ZeroStartVector,

    #[error("operator produced a non-finite value at Lanczos step {step}")]
    NonFinite { step: usize },

    #[error("function undefined at Ritz value {value}; operator not positive definite or interval misdeclared")]
    UndefinedAtRitzValue { value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("spectral norm iteration stopped with relative residual {residual:e}")]
    NormNotConverged { residual: f64 },

    #[error("probe {index}: {source}")]
    Probe {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix of dimension {n} exceeds the dense limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::ZeroStartVector => "zero_start_vector",
            Error::NonFinite { .. } => "non_finite",
            Error::UndefinedAtRitzValue { .. } => "undefined_at_ritz_value",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NormNotConverged { .. } => "norm_not_converged",
            Error::Probe { .. } => "probe",
            Error::TooLarge { .. } => "too_large",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
