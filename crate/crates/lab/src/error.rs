use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] sdwave::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Validation(_) => 3,
            LabError::Numerical(_) | LabError::Io(_) => 4,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
