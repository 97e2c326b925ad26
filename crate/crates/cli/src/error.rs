use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] sublinear_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("did not converge: {0}")]
    Nonconvergence(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 for bad input, 2 for nonconvergence, 3 for failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(_) | CliError::Io(_) => 1,
            CliError::Nonconvergence(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
