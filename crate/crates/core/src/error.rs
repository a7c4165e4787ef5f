use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    IoPath {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed container or header (WAV, TFM1, RSLM, CSV, JSON).
    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal of {len} samples is shorter than one frame of {frame_len}")]
    EmptyFrames { len: usize, frame_len: usize },

    #[error("degenerate filterbank: {0}")]
    DegenerateFilterbank(String),

    #[error("longest atom ({atom_len} samples) exceeds the signal ({signal_len} samples)")]
    AtomTooLong { atom_len: usize, signal_len: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite value in {context}")]
    NumericFailure { context: String },

    #[error("training diverged at epoch {epoch}: {msg}")]
    TrainingFailure { epoch: usize, msg: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io_at(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoPath {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericFailure { .. } | Error::TrainingFailure { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(format!("json: {e}"))
    }
}
