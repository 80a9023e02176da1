use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence within the subdivision budget (estimate {estimate:e}, residual {residual:e})")]
    Convergence { estimate: f64, residual: f64 },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("flux inconsistency: {0}")]
    FluxInconsistency(String),

    #[error("matrix dimension {dim} exceeds the cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
