use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate entry at ({row}, {col}) (1-based)")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("insufficient overlap: need at least {needed} shared columns, found {found}")]
    InsufficientOverlap { needed: usize, found: usize },

    #[error("entry {which} at ({row}, {col}) is not observed")]
    MissingEntry {
        which: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty evaluation scope")]
    EmptyScope,

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    ///
    /// 2 is reserved for usage errors (reported by the argument parser and
    /// by [`Error::InvalidParameter`]), 3 for malformed or inconsistent data,
    /// 4 for numeric failures such as undefined metrics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 2,
            Error::Parse { .. }
            | Error::DuplicateEntry { .. }
            | Error::Dimension(_)
            | Error::IndexOutOfRange(_)
            | Error::MissingEntry { .. }
            | Error::ShapeMismatch(_)
            | Error::Io(_)
            | Error::Json(_) => 3,
            Error::InsufficientOverlap { .. } | Error::EmptyScope | Error::UndefinedMetric(_) => 4,
        }
    }
}
