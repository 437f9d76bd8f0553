use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure kinds raised by the library.
///
/// The variants are grouped by what the caller did wrong: bad input values
/// (`NonFinite`, `Domain`, `NonPositiveTarget`, `DuplicateInput`), mismatched
/// shapes (`Shape`), or a computation that could not be completed in double
/// precision (`Numeric`, `Overflow`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{0}")]
    Domain(String),

    /// `position` is 1-based.
    #[error("observation {position} has nonpositive objective value {value}; the log transform requires y > 0")]
    NonPositiveTarget { position: usize, value: f64 },

    /// Positions are 1-based.
    #[error("observations {first} and {second} share the same input while the noise variance is 0")]
    DuplicateInput { first: usize, second: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("overflow: {0}")]
    Overflow(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by the caller's data rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::Overflow(_))
    }
}

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}
