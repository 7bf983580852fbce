//! Error type shared by every module of the engine.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands whose dimensions must chain do not.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A cache or state object does not belong to the model it is used with.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A file exists but its contents could not be parsed.
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A file referenced by a manifest or flag does not exist.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    /// A dataset sample failed validation.
    #[error("sample `{sample_id}` ({kind}): {message}")]
    Sample {
        sample_id: String,
        kind: SampleFault,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What was wrong with a dataset sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFault {
    /// A referenced side file could not be parsed.
    Parse,
    /// A referenced side file does not exist.
    MissingFile,
    /// Landmark count or feature shape disagrees with the manifest.
    Dimension,
    /// The label is outside the manifest's class list.
    Label,
    /// Neither features nor an image were supplied, or a value is invalid.
    Invalid,
}

impl std::fmt::Display for SampleFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SampleFault::Parse => "parse error",
            SampleFault::MissingFile => "missing file",
            SampleFault::Dimension => "dimension mismatch",
            SampleFault::Label => "label out of range",
            SampleFault::Invalid => "invalid sample",
        })
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            return Error::MissingFile(path);
        }
        Error::Io { path, source }
    }

    pub(crate) fn sample(
        sample_id: impl Into<String>,
        kind: SampleFault,
        message: impl Into<String>,
    ) -> Self {
        Error::Sample {
            sample_id: sample_id.into(),
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
