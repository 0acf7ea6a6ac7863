use std::path::{Path, PathBuf};

/// Failures surfaced to the shell. Each kind has its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input: bad JSON, wrong field types, inconsistent arguments.
    #[error("schema error: {0}")]
    Schema(String),
    /// The input was well formed but no calibration could be estimated.
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const EXIT_SCHEMA: i32 = 2;
    pub const EXIT_ESTIMATION: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => Self::EXIT_SCHEMA,
            CliError::Estimation(_) => Self::EXIT_ESTIMATION,
            CliError::Io { .. } => Self::EXIT_IO,
        }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<pedcal::Error> for CliError {
    fn from(e: pedcal::Error) -> Self {
        if e.is_estimation_failure() {
            CliError::Estimation(e.to_string())
        } else {
            CliError::Schema(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
