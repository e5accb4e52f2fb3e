use std::fmt;
use std::path::PathBuf;

use rmprod_core::Error as CoreError;

/// Exit status of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    CheckFailure = 1,
    Usage = 2,
    Numerical = 3,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(CoreError),
    Io { path: PathBuf, source: std::io::Error },
    Format(String),
}

impl CliError {
    /// Domain errors come from user input; everything else is numerical.
    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::Domain(msg) => Self::Usage(msg),
            other => Self::Numerical(other),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::Usage,
            Self::Numerical(_) | Self::Io { .. } | Self::Format(_) => ExitCode::Numerical,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::from_core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(msg) => write!(f, "usage error: {msg}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Format(msg) => write!(f, "malformed output file: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
