//! Orchestration for `indexlab`: scenarios, run records with a content-addressed cache, plots and
//! the randomized property runner.

pub mod plot;
pub mod properties;
pub mod record;
pub mod run;
pub mod scenario;

use indexlab_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

/// An error with the process exit code it maps to.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INVALID, message: msg.into() }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INTERNAL, message: msg.into() }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. }
            | Error::SingularIterate { .. }
            | Error::GridTooCoarse(_)
            | Error::StepTooCoarse { .. }
            | Error::AmbiguousCrossing { .. }
            | Error::Lapack { .. } => EXIT_NUMERICAL,
            Error::RankDeficient { .. } => EXIT_INTERNAL,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::internal(format!("i/o: {e}"))
    }
}

/// Parses `AxB` into two positive integers.
pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected AxB, got '{s}'"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    if a == 0 || b == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((a, b))
}
