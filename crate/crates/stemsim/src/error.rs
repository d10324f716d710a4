//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {message}")]
    Wav { path: PathBuf, message: String },

    #[error("sample rate mismatch on {path}: expected {expected} Hz, found {found} Hz (no resampler is provided)")]
    SampleRateMismatch {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("track {track_id}: no segments ({reason})")]
    NoSegments { track_id: String, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("length mismatch: reference has {reference} samples, estimate has {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },

    #[error("reference signal is all zero")]
    ZeroReference,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero-norm vector where a direction is required")]
    ZeroNorm,

    #[error("degenerate zero centroid for track {0}")]
    ZeroCentroid(String),

    #[error("unknown track {0}")]
    UnknownTrack(String),

    #[error("triplet sampling needs {0}")]
    SamplingPrecondition(String),

    #[error("non-finite gradient entry in {0}")]
    NonFiniteGradient(String),

    #[error("degenerate correlation input: {0}")]
    DegenerateCorrelation(String),

    #[error("listening-set construction failed: candidate pools kept overlapping after {attempts} attempts")]
    ListeningSetConstruction { attempts: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("model file {path}: {message}")]
    ModelFile { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration/usage problems,
    /// 1 for runtime and data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            _ => 1,
        }
    }
}
