//! Dual-pathway interaction recognition: a low-rate appearance pathway and a
//! high-rate motion pathway over the same clip, lateral conv-fusion between
//! them, optional attention-gated fusion of object-track features into either
//! pathway, and a jointly trained pair of classification heads.

mod blocks;
mod config;
mod error;
mod model;
mod sampling;

pub use blocks::{
    block_forward, lateral_fuse, pathway_forward, BlockParams, LateralParams, NormParams,
    PathwayOutputs, PathwayParams, StageParams,
};
pub use config::{FusionMode, PathwayConfig, PathwayKind};
pub use error::{PathwayError, Result};
pub use model::{count_parameters, joint_loss, DualOutput, HeadParams, Model, VIDEO_CHANNELS};
pub use sampling::{max_offset, sample_frames};
