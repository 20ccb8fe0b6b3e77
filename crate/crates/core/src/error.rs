use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("background estimation impossible: every pixel is rough ink")]
    BackgroundEstimation,

    #[error("no boundary to march from: mask covers the entire image")]
    NoBoundary,

    #[error("background too dark: {bright} of {total} border pixels exceed the threshold")]
    BackgroundTooDark { bright: usize, total: usize },

    #[error("degenerate ground truth: no non-uniform 8x8 block but {flipped} flipped pixels")]
    DegenerateGroundTruth { flipped: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in {0} series")]
    ZeroVariance(&'static str),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidImage(_) => "invalid_image",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Parameter(_) => "parameter",
            Error::BackgroundEstimation => "background_estimation",
            Error::NoBoundary => "no_boundary",
            Error::BackgroundTooDark { .. } => "background_too_dark",
            Error::DegenerateGroundTruth { .. } => "degenerate_ground_truth",
            Error::InsufficientData(_) => "insufficient_data",
            Error::ZeroVariance(_) => "zero_variance",
            Error::Format { .. } => "format",
            Error::Manifest(_) => "manifest",
            Error::Io { .. } => "io",
            Error::Codec { .. } => "codec",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
