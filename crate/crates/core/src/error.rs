use std::fmt;
use std::path::PathBuf;

use crate::imaging::ColorSpace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage at which a registration attempt gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Features,
    Matching,
    Ransac,
    Crop,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Features => "features",
            Stage::Matching => "matching",
            Stage::Ransac => "ransac",
            Stage::Crop => "crop",
        };
        f.write_str(s)
    }
}

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid colorspace: expected {expected:?}, found {found:?}")]
    InvalidColorspace { expected: ColorSpace, found: ColorSpace },
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transform is singular")]
    SingularTransform,
    #[error("image too small: {width}x{height}, need at least {min} on each side")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate geometry: every candidate sample is collinear")]
    DegenerateGeometry,
    #[error("mask has no valid pixels")]
    EmptyMask,
    #[error("alignment failed at {stage} stage: {reason}")]
    AlignmentFailed { stage: Stage, reason: String },
    #[error("frame count mismatch: {hr} HR frames vs {lr} LR frames")]
    FrameCountMismatch { hr: usize, lr: usize },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Stage of failure, if this error came out of the registration pipeline.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::AlignmentFailed { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
