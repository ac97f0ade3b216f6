use thiserror::Error;

pub type Result<T> = std::result::Result<T, PathwayError>;

#[derive(Debug, Error)]
pub enum PathwayError {
    #[error("invalid pathway config: {reason}")]
    InvalidConfig { reason: String },

    #[error("clip too short: {t} frames, need at least {needed}")]
    ClipTooShort { t: usize, needed: usize },

    #[error("mode {mode} requires object tracks but none were supplied")]
    ModeNeedsTracks { mode: String },

    #[error("mode {mode} requires video frames but none were supplied")]
    ModeNeedsVideo { mode: String },

    #[error("joint loss needs at least one prediction head")]
    NoHeads,

    #[error("unknown fusion mode '{token}'")]
    UnknownMode { token: String },

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    Track(#[from] track_model::TrackError),
}
