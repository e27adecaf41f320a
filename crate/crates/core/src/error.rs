use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model file line {line}: {msg}")]
    ModelParse { line: usize, msg: String },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid solver configuration: {0}")]
    InvalidStepConfig(String),

    /// The requested step is too large for the local collision stiffness.
    #[error("CFL violation: dt = {dt:e} exceeds the admissible step; required dt <= {required:e}")]
    Cfl { dt: f64, required: f64 },

    #[error("Picard iteration did not contract after {iterations} iterations (last sup-distance {distance:e})")]
    NonContraction { iterations: usize, distance: f64 },

    #[error("series `{name}`: time {time} does not follow the previous record")]
    NonMonotoneSeries { name: String, time: f64 },

    #[error("no blow-up trend: {0}")]
    NoBlowupTrend(String),

    /// Argument outside the range where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
