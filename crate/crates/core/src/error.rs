use std::path::PathBuf;

/// Errors produced anywhere in the counting pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("resource cap exceeded: {0}")]
    Resource(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("ising mapping error: {0}")]
    Mapping(String),

    #[error("sampling stalled: {0}")]
    Stall(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Input(_) | Error::Parse { .. } | Error::Io { .. } | Error::Config(_) => 3,
            Error::Fit(_) | Error::Mapping(_) | Error::Numeric(_) | Error::Generation(_) => 3,
            Error::Resource(_) => 4,
            Error::Stall(_) => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
