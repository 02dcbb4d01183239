use std::fmt;
use std::process::ExitCode;

use hipsynth_core::Error as CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Input = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Usage,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn input(err: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Input,
            error: err.into(),
        }
    }

    pub fn internal(err: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind: ExitKind::Internal,
            error: err.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }

    pub fn context(mut self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(ctx);
        self
    }
}

fn kind_of(e: &CoreError) -> ExitKind {
    match e {
        CoreError::Config(_) => ExitKind::Usage,
        CoreError::PlanMismatch { .. } | CoreError::Numeric(_) => ExitKind::Internal,
        _ => ExitKind::Input,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError {
            kind: kind_of(&e),
            error: e.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Attaches context to core results while keeping their exit class.
pub trait ResultExt<T> {
    fn ctx<C: fmt::Display + Send + Sync + 'static>(self, f: impl FnOnce() -> C) -> CliResult<T>;
}

impl<T> ResultExt<T> for Result<T, CoreError> {
    fn ctx<C: fmt::Display + Send + Sync + 'static>(self, f: impl FnOnce() -> C) -> CliResult<T> {
        self.map_err(|e| CliError::from(e).context(f()))
    }
}

impl<T> ResultExt<T> for Result<T, std::io::Error> {
    fn ctx<C: fmt::Display + Send + Sync + 'static>(self, f: impl FnOnce() -> C) -> CliResult<T> {
        self.map_err(|e| CliError::input(anyhow::Error::from(e).context(f())))
    }
}
