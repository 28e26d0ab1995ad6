use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Errors raised by the core crate while a check runs. Contradictions
    /// between computed quantities are inconsistencies; everything else
    /// traces back to parameters the config supplied.
    pub fn from_core(e: morrey_core::Error) -> Self {
        use morrey_core::Error as E;
        match e {
            E::Inconsistency(_) | E::UnverifiablePair(_) | E::DegenerateNorm(_) | E::NegativePair(_) => CliError::Inconsistency(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }

    pub fn status(&self) -> Status {
        match self {
            CliError::Config(_) | CliError::Io(_) => Status::InvalidConfig,
            CliError::Inconsistency(_) => Status::Inconsistency,
        }
    }
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    FailedCheck = 1,
    InvalidConfig = 2,
    Inconsistency = 3,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}
