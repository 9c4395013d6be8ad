use thiserror::Error;

/// Errors raised by the library. Degenerate statistical states (an
/// undefined variance, a vanishing boundary weight) are encoded as infinite
/// values rather than errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value is outside its domain (non-finite, wrong sign, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A domain type would violate one of its invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A custom boundary shape failed its probe-grid validation.
    #[error("boundary shape rejected: {0}")]
    Validation(String),

    /// The operation was called with an argument of the wrong kind, e.g. a
    /// one-sided critical value where a two-sided one is required.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
