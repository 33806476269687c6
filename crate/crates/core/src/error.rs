use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid stencil order {0}: expected an even integer in [2, 20]")]
    InvalidOrder(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {index} at {coordinates:?} lies outside the physical domain")]
    OutsideDomain { index: usize, coordinates: Vec<f64> },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("size mismatch: sidecar shape holds {expected} elements but {path} holds {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error(
        "numerical instability detected at step {step}: wavefield became non-finite \
         (last finite max|p| = {last_finite_max:e}); reduce dt below the stable bound {stable_dt:e} s"
    )]
    Instability {
        step: usize,
        last_finite_max: f64,
        stable_dt: f64,
    },

    #[error("serial and parallel backends disagree: {0}")]
    BackendMismatch(String),

    #[error("snapshot storage needs {required} bytes, above the cap of {cap} bytes")]
    MemoryCap { required: u64, cap: u64 },

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of the numerics themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Instability { .. } | Error::BackendMismatch(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
