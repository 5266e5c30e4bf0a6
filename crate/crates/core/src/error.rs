use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical, spectral and analytic routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("window [{lo}, {hi}] exceeds spectrum length {len}")]
    WindowOutOfRange { lo: usize, hi: usize, len: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("family `{0}` has no run that reached the target")]
    EmptyFamily(String),

    #[error("incomplete record: {0}")]
    IncompleteRecord(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}
