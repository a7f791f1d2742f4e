//! Exit-code policy: usage and configuration problems exit with 2, data and
//! computation problems with 3, and every error is named on stderr.

use pulsegaze::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed configuration, or out-of-range parameters.
    Usage(String),
    /// Unreadable, malformed, or degenerate input data.
    Data(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidConfig(_) => CliError::Usage(msg),
            _ => CliError::Data(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
