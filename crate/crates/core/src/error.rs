use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncation or configuration parameter exceeds a hard limit.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested operation is not supported for these arguments.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The round-trip operator is not a contraction at the given term.
    #[error("numerical validity error at Matsubara index {n}, m = {m}: {detail}")]
    Validity { n: usize, m: usize, detail: String },

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Attach a Matsubara index to a validity error raised without one.
    pub(crate) fn at_matsubara(self, n: usize) -> Self {
        match self {
            Error::Validity { m, detail, .. } => Error::Validity { n, m, detail },
            other => other,
        }
    }
}
