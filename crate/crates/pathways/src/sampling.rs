use crate::config::{PathwayConfig, PathwayKind};
use crate::error::{PathwayError, Result};
use tensor_core::{Real, Tensor};

/// Uniform-stride frame subsampling for one pathway. The motion pathway takes
/// `rate_ratio * T_A` frames; the appearance stride is `rate_ratio` times the
/// motion stride so its frames are a subset of the motion grid. `offset`
/// shifts the whole grid (temporal jitter in training; 0 in eval).
pub fn sample_frames<F: Real>(
    video: &Tensor<F>,
    pathway: PathwayKind,
    cfg: &PathwayConfig,
    offset: usize,
) -> Result<Tensor<F>> {
    let shape = video.shape();
    let t = shape[0];
    let frame_len: usize = shape[1..].iter().product();
    let t_motion = cfg.frames_motion();
    let motion_stride = t / t_motion;
    if motion_stride == 0 {
        return Err(PathwayError::ClipTooShort {
            t,
            needed: t_motion,
        });
    }
    let (count, stride) = match pathway {
        PathwayKind::Motion => (t_motion, motion_stride),
        PathwayKind::Appearance => (cfg.frames_appearance, motion_stride * cfg.rate_ratio),
    };
    let last = offset + (count - 1) * stride;
    if last >= t {
        return Err(PathwayError::ClipTooShort { t, needed: last + 1 });
    }
    let mut data = Vec::with_capacity(count * frame_len);
    for i in 0..count {
        let src = (offset + i * stride) * frame_len;
        data.extend_from_slice(&video.data()[src..src + frame_len]);
    }
    let mut out_shape = shape.to_vec();
    out_shape[0] = count;
    Ok(Tensor::new(out_shape, data)?)
}

/// Largest valid temporal jitter offset for a clip of length `t`.
pub fn max_offset(t: usize, cfg: &PathwayConfig) -> usize {
    let t_motion = cfg.frames_motion();
    let stride = t / t_motion;
    if stride == 0 {
        return 0;
    }
    t - 1 - (t_motion - 1) * stride
}
