use std::path::PathBuf;

use lrlab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage, 2 I/O or bad input data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(e) if e.is_io() => 2,
            // Shapes only disagree when the files on disk do.
            CliError::Core(CoreError::ShapeMismatch(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(CliError::usage("x").exit_code(), 1);
        assert_eq!(CliError::from(CoreError::InvalidArgument("x".into())).exit_code(), 1);
        assert_eq!(CliError::io("a", std::io::Error::other("x")).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::MissingFile("a".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::ShapeMismatch("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::Numerical("x".into())).exit_code(), 3);
        let nested = CoreError::Solver {
            iteration: 4,
            source: Box::new(CoreError::Numerical("x".into())),
        };
        assert_eq!(CliError::from(nested).exit_code(), 3);
    }
}
