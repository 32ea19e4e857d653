use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the engine.
///
/// Variants split into contract violations (bad inputs, broken invariants)
/// and I/O failures; [`Error::is_io`] tells them apart for exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("unsupported format version: {0}")]
    Version(String),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("scene is empty")]
    EmptyScene,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tile mask does not cover the footprint of active Gaussian {0}")]
    MaskTooSmall(usize),
    #[error("pixel mask is empty")]
    EmptyMask,
    #[error("index {index} out of range or not permitted (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("active set must be a contiguous suffix of the scene")]
    ActiveSetNotSuffix,
    #[error("image smaller than patch size {patch}: {width}x{height}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        patch: usize,
    },
    #[error("feature file inconsistent with image: {0}")]
    FeatureFileMismatch(String),
    #[error("no views supplied")]
    NoViews,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("point sampling stalled: no accepted points after {0} rounds")]
    SamplingStalled(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing delta for time {0}")]
    MissingDelta(u32),
    #[error("bitmap mismatch: {0}")]
    BitmapMismatch(String),
    #[error("concurrent updates overlap at index {0}")]
    OverlappingChanges(usize),
    #[error("scene has no objects")]
    NoObjects,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the environment rather than of the caller's contract.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Image { .. } | Error::Csv(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
