use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two functional objects that must share a layout do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(
        "rank-deficient design: {deficient} of {columns} columns are linearly dependent{context}"
    )]
    RankDeficient {
        deficient: usize,
        columns: usize,
        context: String,
    },

    /// A predictor was asked for a time whose covariates are not available.
    #[error("prediction unavailable at t={t}: {reason}")]
    Unavailable { t: usize, reason: String },

    #[error("unstable VAR: {0}")]
    Unstable(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    /// The band is the whole function space, so no finite size exists.
    #[error("band covers the entire space (alpha below b/(l+1)); no finite {0}")]
    EntireSpace(&'static str),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing days in book history: {0}")]
    MissingDays(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Parse failure with enough location data to point at the offending input.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{}: {message}", .path, .line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct ParseError {
    /// Element path (`auction/order[3]`), column name, or file section.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn new(path: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        ParseError {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
