use thiserror::Error;

pub type Result<T> = std::result::Result<T, TrackError>;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("invalid bounding box ({x1}, {y1}, {x2}, {y2}): {reason}")]
    InvalidBBox {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        reason: &'static str,
    },

    #[error("score {score} outside [0, 1]")]
    InvalidScore { score: f64 },

    #[error("frame index {frame} >= clip length {t}")]
    FrameOutOfRange { frame: usize, t: usize },

    #[error("object tensor needs at least one slot (D >= 1)")]
    NoSlots,

    #[error("invalid encoder config: {reason}")]
    InvalidConfig { reason: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}
