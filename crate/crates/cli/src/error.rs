use pedeval_core::ingest::IngestError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Input(#[from] IngestError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Output {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) | CliError::Invalid(_) | CliError::Output { .. } => 1,
        }
    }
}
