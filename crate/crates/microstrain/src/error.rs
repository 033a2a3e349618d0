use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] microstrain_core::Error),

    #[error("frame directory {0} does not exist")]
    MissingDirectory(PathBuf),

    #[error("{dir}: sequence too short ({frames} frames, need at least 2)")]
    SequenceTooShort { dir: PathBuf, frames: usize },

    #[error("{path}: frame is {found:?}, expected {expected:?} (width, height)")]
    FrameDimensionMismatch {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{path}: cannot decode frame: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("manifest contains no videos")]
    EmptyManifest,

    #[error("config: {0}")]
    Config(String),

    #[error("feature file: {0}")]
    FeatureFile(String),

    #[error("flow file: {0}")]
    FlowFile(String),

    #[error("video {video_id}: {source}")]
    Video {
        video_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("no videos left after skipping failures")]
    NoFeatures,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Encode(#[from] image::ImageError),

    #[error("synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attaches the offending path to an IO error.
pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
