use std::fmt;

use krnet_core::Error;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 2,
    Data = 3,
    Checkpoint = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        // Diagnostics must fit on one line.
        let message = message.into().split_whitespace().collect::<Vec<_>>().join(" ");
        Self { kind, message }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Data, message)
    }

    pub fn checkpoint(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Checkpoint, message)
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Config(_)
            | Error::Shape(_)
            | Error::Size(_)
            | Error::DegenerateBatch { .. }
            | Error::State(_)
            | Error::Argument(_)
            | Error::Spec(_) => ExitKind::Config,
            Error::EmptyEpoch | Error::Data(_) | Error::Pnm(_) | Error::Io(_) => ExitKind::Data,
            Error::Checkpoint(_) => ExitKind::Checkpoint,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(format!("i/o error: {e}"))
    }
}

pub(crate) trait Context<T> {
    /// Reclassifies any failure as `kind`, prefixing `what`.
    fn context(self, kind: ExitKind, what: impl fmt::Display) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, kind: ExitKind, what: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(kind, format!("{what}: {}", e.into())))
    }
}
