use std::fmt;
use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the command line can report. `Display` is a single line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", .0)]
    Parse(ParseError),
    #[error("config key '{key}': {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] edgesplat_core::Error),
}

impl Error {
    /// Short machine-readable category used as the error line prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
            Error::Config { .. } => "config",
            Error::Usage(_) => "usage",
            Error::Core(_) => "compute",
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn parse(source: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse(ParseError { source: source.into(), line, message: message.into() })
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }
}

/// Malformed input, located by file (or stream name) and 1-based line.
#[derive(Debug)]
pub struct ParseError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}
