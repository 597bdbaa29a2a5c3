use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("design variable {index} = {value} lies outside [0, 1]")]
    DesignOutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("non-finite value in transient state at step {step}")]
    NonFinite { step: usize },

    #[error("baseline spectrum too weak at bin {bin} ({freq_hz} Hz): |p0| = {magnitude:e} < {threshold:e}")]
    WeakExcitation {
        bin: usize,
        freq_hz: f64,
        magnitude: f64,
        threshold: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cut element {element} has no quadrature data")]
    MissingCutData { element: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
