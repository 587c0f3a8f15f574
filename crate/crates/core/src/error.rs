use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("asymmetric entries: p[{i}][{j}] + p[{j}][{i}] = {sum} (expected 1)")]
    Asymmetry { i: usize, j: usize, sum: f64 },

    #[error("diagonal entry p[{i}][{i}] = {value} (expected 0.5)")]
    Diagonal { i: usize, value: f64 },

    #[error("entry p[{i}][{j}] = {value} is outside [0, 1]")]
    Range { i: usize, j: usize, value: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty arm set")]
    EmptySet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
