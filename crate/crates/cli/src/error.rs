use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("expression `{expr}`: {message}")]
    Expr { expr: String, message: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Core(#[from] emlab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trace: {0}")]
    Trace(String),
    /// A run finished but violated a property it is required to keep.
    #[error("{experiment}: {message}")]
    Invariant {
        experiment: &'static str,
        message: String,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
