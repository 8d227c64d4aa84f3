use thiserror::Error;

/// Errors produced by code construction, decoding, attack accumulation and
/// the analytic model.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("infeasible error ensemble: {0}")]
    InfeasibleEnsemble(String),

    #[error("invalid decoder configuration: {0}")]
    InvalidDecoderConfig(String),

    #[error("operation requires a quasi-cyclic code")]
    NotQuasiCyclic,

    #[error("incompatible pair statistics: {0}")]
    IncompatibleStats(String),

    #[error("prediction table is not strictly monotone in gamma")]
    NonMonotonePredictions,

    #[error("missing distance classes: {0}")]
    MissingClasses(String),

    #[error("block {block}: {missing} of {total} distance classes have no estimate")]
    IncompleteCoverage { block: usize, missing: usize, total: usize },

    #[error("model parameters out of domain: {0}")]
    ModelDomain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("counter overflow risk: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
