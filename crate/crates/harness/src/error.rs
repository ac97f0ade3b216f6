use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {reason}")]
    Config { reason: String },

    #[error("config {path}:{line}: {msg}")]
    ConfigParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("unknown config key '{key}'")]
    UnknownKey { key: String },

    #[error("bad value '{value}' for key '{key}': {msg}")]
    BadValue {
        key: String,
        value: String,
        msg: String,
    },

    #[error("metrics: {reason}")]
    Metrics { reason: String },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },

    #[error("checkpoint version {found} unsupported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("checkpoint parameter mismatch; missing: [{missing}], unexpected: [{unexpected}]")]
    CheckpointParams { missing: String, unexpected: String },

    #[error("ensemble needs >= 1 checkpoint, all over the same class count")]
    EnsembleMembers,

    #[error("ensemble class-count mismatch: {a} vs {b}")]
    EnsembleClasses { a: usize, b: usize },

    #[error("dataset: {reason}")]
    Dataset { reason: String },

    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },

    #[error(transparent)]
    Pathway(#[from] pathways::PathwayError),

    #[error(transparent)]
    Track(#[from] track_model::TrackError),

    #[error(transparent)]
    Synth(#[from] synthbench::SynthError),

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }
}
