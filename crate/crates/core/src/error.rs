use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster dimensions {height}x{width}x{channels}")]
    InvalidDimensions {
        height: usize,
        width: usize,
        channels: usize,
    },

    #[error("sample buffer has {actual} values, expected {expected}")]
    SampleCount { expected: usize, actual: usize },

    #[error("raster contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("invalid neighborhood: {0}")]
    InvalidNeighborhood(String),

    #[error("valid region is empty; the raster is smaller than the neighborhood")]
    EmptyRegion,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("unknown padding method `{0}`")]
    UnknownMethod(String),

    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry is infeasible: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed raster file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
