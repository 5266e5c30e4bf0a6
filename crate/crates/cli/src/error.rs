use splx::ingest::IngestError;

/// A command failure carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    MissingInput(String),

    #[error("{0}")]
    BadWindow(String),

    #[error("{0}")]
    KindMismatch(String),

    #[error("{0}")]
    NothingAnalyzable(String),

    #[error("{0}")]
    UnknownTarget(String),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => 2,
            CliError::BadWindow(_) => 3,
            CliError::KindMismatch(_) => 4,
            CliError::NothingAnalyzable(_) => 5,
            CliError::UnknownTarget(_) => 6,
            CliError::Failed(_) => 1,
        }
    }

    pub fn failed(msg: impl std::fmt::Display) -> Self {
        CliError::Failed(msg.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::NotFound { .. } => CliError::MissingInput(e.to_string()),
            IngestError::KindMismatch { .. } => CliError::KindMismatch(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<splx::Error> for CliError {
    fn from(e: splx::Error) -> Self {
        match e {
            splx::Error::WindowOutOfRange { .. } => CliError::BadWindow(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
