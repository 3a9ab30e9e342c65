use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The iterative SVD did not converge, or a non-finite value appeared.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failed at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("recognition failed for subject {subject}: {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<Error>,
    },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed image header in {}: {reason}", .path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported bit depth in {}: {detail}", .path.display())]
    UnsupportedDepth { path: PathBuf, detail: String },

    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),

    #[error("malformed data in {}: {reason}", .path.display())]
    MalformedData { path: PathBuf, reason: String },

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate in numerical code (SVD failure, NaN).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Solver { source, .. } | Error::Subject { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// True for errors raised while touching the filesystem or decoding files.
    pub fn is_io(&self) -> bool {
        match self {
            Error::MissingFile(_)
            | Error::MalformedHeader { .. }
            | Error::UnsupportedDepth { .. }
            | Error::UnsupportedFormat(_)
            | Error::MalformedData { .. }
            | Error::Io { .. } => true,
            Error::Solver { source, .. } | Error::Subject { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
