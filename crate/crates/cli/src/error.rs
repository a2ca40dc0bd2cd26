use openpop_core::Error;
use thiserror::Error as ThisError;

/// CLI failure, classified by exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    /// Malformed or invalid configuration, or bad command-line values.
    #[error("{0}")]
    Config(String),
    /// A fit degenerated or no family admits the data.
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Degenerate(_) => 3,
            Self::Runtime(_) => 1,
        }
    }

    /// Classify a library error, prefixing `context` to its message.
    pub fn from_core(context: impl std::fmt::Display, e: &Error) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            Error::DegenerateFit { .. } | Error::ImpossibleFamily(_) | Error::NoAdmissibleFamily | Error::DegenerateWeight => {
                Self::Degenerate(msg)
            }
            Error::FingerprintMismatch { .. } => Self::Runtime(msg),
            _ => Self::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}
