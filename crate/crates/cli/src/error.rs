use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] eb_shrink_core::Error),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Refused(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Parse { .. } => "parse-error",
            CliError::Refused(_) => "refused",
            CliError::Io { .. } => "io-error",
            CliError::Output(_) => "output-error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "invalid-argument" => 2,
            "numeric-failure" => 3,
            "parse-error" => 4,
            "refused" => 5,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
