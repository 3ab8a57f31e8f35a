use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const DATA: i32 = 4;
    pub const FORMAT: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] toruse::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use toruse::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => exit::USAGE,
            CliError::Io { .. } => exit::IO,
            CliError::Json(_) => exit::FORMAT,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => exit::USAGE,
                E::Io { .. } => exit::IO,
                E::Parse { .. } | E::EmptySplit(_) | E::IdOutOfRange { .. } => exit::DATA,
                E::Format(_) | E::Consistency(_) | E::Json(_) | E::DimensionMismatch { .. } => exit::FORMAT,
                E::InvalidState(_) | E::InvalidOperation(_) | E::Csv(_) => exit::INTERNAL,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
