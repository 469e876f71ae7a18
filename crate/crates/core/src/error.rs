use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid side {0} is not a power of two >= 16")]
    InvalidGrid(usize),
    #[error("grid mismatch: side {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("scale {j} exceeds the limit {max} for this grid")]
    ScaleTooLarge { j: usize, max: usize },
    #[error("gabor band ({0}, {1}) lies outside the frequency lattice")]
    BandOutOfRange(i32, i32),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("point ({0}, {1}) lies inside the missing strip")]
    PointInMask(usize, usize),
    #[error("point cloud is empty")]
    EmptyPointCloud,
    #[error("missing coherence entry: {0}")]
    MissingCoherence(String),
    #[error("solver produced non-finite values at iteration {0}")]
    Diverged(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
