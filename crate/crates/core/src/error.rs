use thiserror::Error;

use crate::funcspec::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("degenerate seed: s = t = {0}")]
    DegenerateSeed(f64),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("under-determined system: {rows} rows for {cols} columns (need at least {needed})")]
    UnderDetermined { rows: usize, cols: usize, needed: usize },

    #[error("not a collision invariant: {0}")]
    NotAnInvariant(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("line {line}: {message}")]
    Data { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
