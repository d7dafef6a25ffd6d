use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("replication {rep}, estimator `{estimator}`: {source}")]
    Replication {
        rep: usize,
        estimator: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable category, stable across versions.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NumericFailure(_) => "numeric-failure",
            Error::Replication { source, .. } => source.category(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
