use thiserror::Error;

use arq_core::ArqError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Solver(#[from] ArqError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 1 configuration, 2 budget exhausted, 3 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::InvalidArgument(_) => 1,
            HarnessError::Solver(ArqError::Config(_)) | HarnessError::Solver(ArqError::InvalidArgument(_)) => 1,
            HarnessError::Solver(ArqError::BudgetExhausted { .. }) => 2,
            HarnessError::Solver(_) | HarnessError::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
