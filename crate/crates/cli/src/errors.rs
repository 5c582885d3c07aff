//! CLI failure classification: usage/config mistakes exit 2, runtime
//! failures exit 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unknown config keys, malformed values, contradictory
    /// settings. Exit code 2.
    Usage(String),
    /// The configuration was fine but execution failed. Exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> CliError {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<alab_core::Error> for CliError {
    fn from(e: alab_core::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
