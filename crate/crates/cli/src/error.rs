use std::path::Path;

use bci_core::Error;

/// A failure mapped onto the process exit code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, bad config or an unknown name. Exit 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input, unwritable output. Exit 3.
    #[error("{0}")]
    Io(String),
    /// A numerical or pipeline-stage failure. Exit 4.
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn with_context(self, ctx: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{ctx}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{ctx}: {m}")),
            CliError::Pipeline(m) => CliError::Pipeline(format!("{ctx}: {m}")),
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match &e {
            Error::Stage { stage: "configuration", .. } => CliError::Usage(msg),
            Error::Stage { .. } => CliError::Pipeline(msg),
            Error::Io { .. } | Error::Format(_) => CliError::Io(msg),
            Error::InvalidArgument(_) => CliError::Usage(msg),
            Error::DimensionMismatch(_) | Error::Numerical(_) => CliError::Pipeline(msg),
        }
    }
}
