//! Exit codes and the error type that carries them.

use std::fmt;
use std::process::ExitCode;

use transcreate_core::corpus::CorpusError;

pub const USAGE: u8 = 2;
pub const VALIDATION: u8 = 3;
pub const GATEWAY: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::new(USAGE, anyhow::anyhow!("{msg}"))
    }

    pub fn invalid(msg: impl fmt::Display) -> Self {
        Failure::new(VALIDATION, anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let code = match e {
            CorpusError::FileMissing(_) | CorpusError::Io { .. } => USAGE,
            _ => VALIDATION,
        };
        Failure::new(code, e)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

/// Attach an exit code to any error.
pub trait OrExit<T> {
    fn or_exit(self, code: u8) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> CmdResult<T> {
        self.map_err(|e| Failure::new(code, e))
    }
}
