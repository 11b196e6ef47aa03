//! Exit-code-bearing CLI errors: 2 for configuration, 3 for computation.

use rydoa_core::CoreError;
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// The run could not be resolved (preset, overrides, flags, sweep spec).
    Config(String),
    /// The resolved run failed while computing or writing results.
    Compute(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn compute(msg: impl Into<String>) -> Self {
        CliError::Compute(msg.into())
    }

    /// Wrap a core error raised during run resolution.
    pub fn from_resolve(e: CoreError) -> Self {
        CliError::Config(e.to_string())
    }

    /// Wrap a core error raised after resolution succeeded.
    pub fn from_compute(e: CoreError) -> Self {
        CliError::Compute(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
