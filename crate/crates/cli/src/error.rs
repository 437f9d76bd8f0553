use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes, following the BSD `sysexits.h` values where they exist.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const DATA: i32 = 65;
    pub const INTERNAL: i32 = 70;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Data(_) => exit::DATA,
            CliError::Numeric(_) => exit::INTERNAL,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Library errors: bad inputs are data errors, numerical breakdowns are internal.
    pub fn from_core(err: logei_core::Error) -> Self {
        if err.is_input_error() {
            CliError::Data(err.to_string())
        } else {
            CliError::Numeric(err.to_string())
        }
    }

    /// Library errors caused directly by command-line arguments.
    pub fn from_core_as_usage(err: logei_core::Error) -> Self {
        if err.is_input_error() {
            CliError::Usage(err.to_string())
        } else {
            CliError::Numeric(err.to_string())
        }
    }
}
