use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The variants split into two families that the command-line runner maps to
/// distinct exit codes: invalid inputs (`Validation`, `Usage`, `NotApplicable`)
/// and numerical failures (`Tolerance`, `Truncation`, `Divergent`,
/// `Numerical`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("quadrature did not reach tolerance: {0}")]
    Tolerance(String),

    #[error("truncation error {bound:e} exceeds requested tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Usage(_) | Error::NotApplicable(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Validation(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
