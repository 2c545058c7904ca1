use std::path::PathBuf;

use crate::tensor3::Dims;

/// Errors raised by the tensor, sampling, forward-model and reconstruction layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {left} and {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Dims,
        right: Dims,
    },

    #[error("index ({i}, {j}, {k}) out of range for tensor of shape {dims}")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        dims: Dims,
    },

    #[error("{op}: operator of shape {dims} is not square in its first two modes")]
    NotSquare { op: &'static str, dims: Dims },

    #[error("data length {len} does not match shape {dims} ({expected} entries)")]
    LengthMismatch {
        len: usize,
        expected: usize,
        dims: Dims,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ground truth has zero Frobenius norm")]
    ZeroNorm,

    #[error("imaginary residue {residue:.3e} exceeds realness tolerance {tolerance:.3e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("unrecoverable column(s) {columns:?}: no samples reach these columns")]
    UnrecoverableColumns { columns: Vec<usize> },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
