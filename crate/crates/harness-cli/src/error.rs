use thiserror::Error;

/// CLI failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config: {0}")]
    Config(String),
    /// Exit code 3.
    #[error("i/o: {0}")]
    Io(String),
    /// Exit code 4.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::MissingArtifact(_) => 4,
        }
    }
}

impl From<baselines::BaselineError> for CliError {
    fn from(err: baselines::BaselineError) -> Self {
        match err {
            baselines::BaselineError::MissingCheckpoint(kind) => {
                CliError::MissingArtifact(format!("{kind:?} needs --checkpoint"))
            }
            baselines::BaselineError::Checkpoint(e) => CliError::MissingArtifact(e.to_string()),
            baselines::BaselineError::Env(e) => CliError::Config(e.to_string()),
        }
    }
}
