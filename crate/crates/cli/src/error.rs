use std::fmt;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Validation = 2,
    ResourceCap = 3,
    Inconsistency = 4,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    ResourceCap(String),
    #[error("{0}")]
    Inconsistency(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Validation(_) | Self::Io(_) => ExitCode::Validation,
            Self::ResourceCap(_) => ExitCode::ResourceCap,
            Self::Inconsistency(_) => ExitCode::Inconsistency,
        }
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        Self::Validation(msg.to_string())
    }
}

impl From<entroflow_core::Error> for CliError {
    fn from(e: entroflow_core::Error) -> Self {
        match e {
            entroflow_core::Error::ResourceCap { .. } => Self::ResourceCap(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
