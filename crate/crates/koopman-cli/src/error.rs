use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {field}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { field: String, line: Option<usize>, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("stage {stage} at truncation {truncation}: {source}")]
    Stage { stage: &'static str, truncation: usize, source: koopman::Error },

    #[error("no check named {0} in any stage report")]
    UnknownCheck(String),

    #[error(transparent)]
    Core(#[from] koopman::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for unusable input, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::UnknownCheck(_) => 2,
            _ => 3,
        }
    }
}
