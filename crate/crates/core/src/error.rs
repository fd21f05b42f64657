use thiserror::Error;

/// Errors raised by the toolkit's validating constructors and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdcError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("graph is disconnected: no path between vertex {from} and vertex {to}")]
    Disconnected { from: usize, to: usize },

    #[error("{what} limited to {limit}, got {got}")]
    SizeCap {
        what: &'static str,
        limit: usize,
        got: usize,
    },
}

impl EdcError {
    pub fn validation(msg: impl Into<String>) -> Self {
        EdcError::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, EdcError>;

/// Checks that `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(EdcError::validation(format!(
            "{name} must be finite and > 0, got {value}"
        )))
    }
}
