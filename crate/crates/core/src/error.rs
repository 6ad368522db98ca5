use thiserror::Error;

/// Every fallible operation in the crate returns this.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision loss: {digits:.1} decimal digits cancelled (guard {guard:.1}) in {context}")]
    PrecisionLoss { digits: f64, guard: f64, context: String },

    #[error("quadrature did not converge (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    Quadrature { achieved: f64, wanted: f64 },

    #[error("negligible denominator: {0}")]
    NegligibleDenominator(String),

    #[error("no acceptances after {proposals} proposals")]
    ZeroAcceptance { proposals: u64 },

    #[error("proposal reached a dead end: {0}")]
    DeadEnd(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("data mismatch: {0}")]
    DataMismatch(String),

    #[error("estimate lies on the parameter boundary: {0}")]
    Boundary(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
