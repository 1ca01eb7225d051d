//! Error type shared across the toolkit.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    #[error("image {width}x{height} is smaller than the {min}x{min} analysis window")]
    ImageTooSmall { width: u32, height: u32, min: u32 },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("placement does not overlap the background")]
    NoOverlap,

    #[error("mask covers the entire image; no boundary pixels to fill from")]
    NoBoundary,

    #[error("restorer '{name}' failed: {message}")]
    Restorer { name: String, message: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {}: {source}", path.display())]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn codec(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Codec {
            path: path.into(),
            source,
        }
    }
}
