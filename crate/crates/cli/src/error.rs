use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use fnnsom::{DatasetError, HarnessError, SomError};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_RUNTIME: u8 = 5;

/// Errors reported by the command line, one exit code per class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations.
    Usage(String),
    /// Invalid configuration or input file contents.
    Config(String),
    /// Files that cannot be read or written.
    Io(String),
    /// Failures while training or measuring.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Runtime(_) => EXIT_RUNTIME,
        })
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Io(e.to_string()),
            DatasetError::Parse { .. } => CliError::Config(e.to_string()),
            DatasetError::EndOfStream => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SomError> for CliError {
    fn from(e: SomError) -> Self {
        match e {
            SomError::Dataset(d) => d.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(m) => CliError::Config(m),
            HarnessError::Som(s) => s.into(),
            HarnessError::Io { .. } => CliError::Io(e.to_string()),
            HarnessError::Csv(ref c) if c.is_io_error() => CliError::Io(e.to_string()),
            HarnessError::Csv(_) => CliError::Config(e.to_string()),
            HarnessError::Json(ref j) if j.is_io() => CliError::Io(e.to_string()),
            HarnessError::Json(_) => CliError::Config(e.to_string()),
        }
    }
}
