use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("layer selection is empty")]
    EmptyLayerSelection,

    #[error("layer {0} is not present in the attention tensor")]
    LayerOutOfRange(usize),

    #[error("attention map has zero total mass")]
    ZeroMass,

    #[error("invalid smoothing kernel size {0} (must be odd and >= 1)")]
    InvalidKernel(usize),

    #[error("malformed attention file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
