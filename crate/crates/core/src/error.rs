use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    Validation,
    Io,
    Computation,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 1,
            ErrorClass::Io => 2,
            ErrorClass::Computation => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Validation => "validation",
            ErrorClass::Io => "io",
            ErrorClass::Computation => "computation",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("NIfTI format error: {0}")]
    Format(String),

    #[error("unsupported rank: {0}")]
    UnsupportedRank(String),

    #[error("label format error: {0}")]
    LabelFormat(String),

    #[error("orientation mismatch: {0} vs {1}")]
    Orientation(String, String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown structure `{0}`")]
    UnknownStructure(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("empty structure: {0}")]
    EmptyStructure(String),

    #[error("undefined distance: {0}")]
    UndefinedDistance(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. } => ErrorClass::Io,
            Error::Format(_)
            | Error::UnsupportedRank(_)
            | Error::LabelFormat(_)
            | Error::Orientation(..)
            | Error::Validation(_)
            | Error::UnknownStructure(_)
            | Error::Schema(_)
            | Error::Input(_)
            | Error::Json(_) => ErrorClass::Validation,
            Error::Geometry(_) | Error::EmptyStructure(_) | Error::UndefinedDistance(_) | Error::Split(_) => {
                ErrorClass::Computation
            }
        }
    }
}
