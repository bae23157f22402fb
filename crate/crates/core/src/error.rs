use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped so that front-ends can map them onto exit codes:
/// configuration problems, geometry/precondition violations, and numerical
/// failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("Hilbert-space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: u128, cap: usize },

    #[error("site {site} is outside the chain of {n_sites} sites")]
    SiteOutOfRange { site: i64, n_sites: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("empty window")]
    EmptyWindow,

    #[error("bias operator does not commute with the Hamiltonian (residual {residual:e})")]
    NonCommutingBias { residual: f64 },

    #[error("operators do not commute (residual {residual:e})")]
    NonCommuting { residual: f64 },

    #[error("requires a periodic chain")]
    NotPeriodic,

    #[error("time {t} exceeds the wrap horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("every requested scan point was excluded by the wrap horizon")]
    AllPointsExcluded,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse classification used by front-ends.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidChain(_)
            | Error::DimensionCap { .. }
            | Error::InvalidInteraction(_)
            | Error::Parse(_) => ErrorKind::Config,
            Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Precondition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Precondition,
    Numerical,
}
