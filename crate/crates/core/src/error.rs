use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported artifact format version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt artifact: {0}")]
    Corruption(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("missing {what}; run `vidvote {producer}` first")]
    MissingArtifact { what: String, producer: &'static str },

    #[error("undefined rate: {0} has a zero denominator")]
    UndefinedRate(&'static str),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant failure: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status for this error when surfaced by the command line tool:
    /// 1 usage/config, 2 data, 3 internal invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::MissingArtifact { .. } => 1,
            Error::Io { .. }
            | Error::Format(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Version { .. }
            | Error::Corruption(_)
            | Error::UndefinedRate(_) => 2,
            Error::Contract(_) | Error::Invariant(_) => 3,
            Error::Fold { source, .. } => source.exit_code(),
        }
    }
}
