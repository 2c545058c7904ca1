use dynsamp_core::Error as CoreError;

/// CLI failure, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration file, flag, or argument value. Exit code 3.
    #[error("configuration error: {0}")]
    Config(String),
    /// Missing, unreadable, malformed or unwritable files. Exit code 4.
    #[error("I/O error: {0}")]
    Io(String),
    /// Some signal columns receive no samples. Exit code 2.
    #[error("{0}")]
    Unrecoverable(String),
    /// Anything else (numerical failures). Exit code 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Unrecoverable(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::UnrecoverableColumns { .. } => CliError::Unrecoverable(msg),
            CoreError::Io { .. } | CoreError::Parse { .. } | CoreError::Json { .. } => {
                CliError::Io(msg)
            }
            CoreError::InvalidArgument(_)
            | CoreError::ShapeMismatch { .. }
            | CoreError::NotSquare { .. } => CliError::Config(msg),
            _ => CliError::Failed(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
