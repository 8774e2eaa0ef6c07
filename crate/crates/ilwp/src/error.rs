use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: ilwp_core::Error,
    },
    #[error(transparent)]
    Codec(#[from] ilwp_core::Error),
    #[error("report: {0}")]
    Report(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: ilwp_core::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 format/data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } => 3,
            Error::File { source, .. } | Error::Codec(source) => match source {
                ilwp_core::Error::Config(_) => 1,
                _ => 2,
            },
            Error::Report(_) => 3,
        }
    }
}
