use std::path::PathBuf;

/// Errors produced by the library. Each variant maps to one CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("state error: {0}")]
    State(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("singular input: {0}")]
    Singularity(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-parsable reason code.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Capacity(_) => "capacity",
            Error::State(_) => "state",
            Error::Numeric(_) => "numeric",
            Error::Singularity(_) => "singularity",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code: 2 config, 3 io, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) | Error::Capacity(_) | Error::State(_) => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Numeric(_) | Error::Singularity(_) => 4,
        }
    }
}
