use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the binarization engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("schema fingerprint mismatch: model {model:016x}, features {features:016x}")]
    SchemaMismatch { model: u64, features: u64 },

    #[error("model error: {0}")]
    Model(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
