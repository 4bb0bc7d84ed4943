use thiserror::Error;

/// Errors produced by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index:?} out of range for dimension {n} and order {m}")]
    IndexOutOfRange {
        index: Vec<usize>,
        n: usize,
        m: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tensor is not super-symmetric at {index:?}: {value} vs {canonical}")]
    SymmetryViolation {
        index: Vec<usize>,
        value: f64,
        canonical: f64,
    },

    #[error("cumulant of order {0} is required but was not supplied")]
    MissingCumulant(usize),

    #[error("data is not centred: column {column} has mean {mean:e} (rms {rms:e})")]
    NotCentered { column: usize, mean: f64, rms: f64 },

    #[error("integer overflow while computing {0}")]
    CountOverflow(&'static str),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("csv line {line}, column {column}: {message}")]
    Csv {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid tensor document: {0}")]
    Document(String),

    #[error("covariance matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for resource guards, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceGuard(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
