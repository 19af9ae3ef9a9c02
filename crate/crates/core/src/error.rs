use thiserror::Error;

use crate::catalog::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ambiguous alignment: correlation peak {peak:.3} is below 0.5")]
    AmbiguousAlignment { peak: f64 },

    #[error("unknown pattern id `{0}`")]
    UnknownPattern(String),

    #[error("catalog is inconsistent: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Catalog(Vec<Violation>),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
