use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),

    #[error("mismatched time intervals: {0}")]
    IntervalMismatch(String),

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing {0}")]
    Missing(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short category label, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Context { source, .. } => source.category(),
            Error::Config(_) | Error::Parse(_) | Error::Decomposition(_) => "config",
            Error::Io { .. } => "io",
            Error::NotPositiveDefinite { .. } | Error::Singular(_) => "solver",
            _ => "numerics",
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: f(),
            source: Box::new(e),
        })
    }
}
