use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation accepts.
    #[error("input out of domain: {0}")]
    InputDomain(String),

    /// A statistical precondition of an estimator does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Every tail estimate was 0 or 1, so no decay rate can be fitted.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse failures for raster files and text configs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("unknown magic bytes {0:?}")]
    UnknownMagic(Vec<u8>),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("invalid pixel value: {0}")]
    InvalidValue(String),

    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::InputDomain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
