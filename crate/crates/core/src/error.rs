use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("ingestion error in {file}:{line}:{column}: {message}")]
    Ingestion {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stream error for agent {agent}: {message}")]
    Stream { agent: usize, message: String },

    #[error("divergence: agent {agent} has a non-finite state at round {round}")]
    Divergence { agent: usize, round: usize },

    #[error("analysis error: {message} (residual {residual:e})")]
    Analysis { message: String, residual: f64 },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("diagnostics error: {message} (achieved {achieved:e})")]
    Diagnostics { message: String, achieved: f64 },

    #[error("metrics error: {0}")]
    Metrics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Domain(_) => 2,
            Error::Ingestion { .. } | Error::Io(_) | Error::Stream { .. } => 3,
            Error::Divergence { .. } => 4,
            Error::Certificate(_) => 5,
            Error::Analysis { .. } | Error::Diagnostics { .. } | Error::Metrics(_) => 1,
        }
    }
}
