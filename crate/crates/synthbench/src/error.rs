use thiserror::Error;

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("vocabulary too small: need at least 2 verbs and 2 nouns, got {verbs} and {nouns}")]
    VocabularyTooSmall { verbs: usize, nouns: usize },

    #[error("unknown {kind} name '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("{kind} index {index} out of range ({len} available)")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid noise preset: {reason}")]
    InvalidNoise { reason: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },

    #[error(transparent)]
    Track(#[from] track_model::TrackError),

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}
