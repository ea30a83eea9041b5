use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate model: every modulation product is zero, the maximal rate is undetermined")]
    DegenerateModel,
    #[error("dual parameterization needs a double-component effect (rho > 0 and mu > 0)")]
    NotDoubleComponent,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit is undefined: {0}")]
    UndefinedFit(&'static str),
    #[error("initialization failed: {0}")]
    Initialization(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::NotDoubleComponent | Error::Config(_) | Error::Parse { .. } | Error::Json(_) => {
                ErrorKind::Validation
            }
            Error::Io { .. } => ErrorKind::Io,
            Error::DegenerateModel | Error::UndefinedFit(_) | Error::Initialization(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<V, E = Error> = std::result::Result<V, E>;
