//! Object-detection time series and their temporal encoder.
//!
//! A clip's detections become a `T x 4D` matrix of concatenated bounding-box
//! coordinates (`D` slots, hands before objects, ranked by confidence), which
//! a stack of stride-1 temporal convolutions encodes into per-layer motion
//! features and an object-only class prediction.

mod detection;
mod encoder;
mod error;
mod io;
mod object_tensor;

pub use detection::{BBox, Category, Detection};
pub use encoder::{count_parameters, TrackEncoder, TrackEncoderConfig, TrackFeatures};
pub use error::{Result, TrackError};
pub use io::{group_by_video, read_track_file, write_track_file};
pub use object_tensor::{build_object_tensor, ObjectTensor, SlotInfo};
