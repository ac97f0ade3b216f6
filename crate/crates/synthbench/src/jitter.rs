use crate::error::{Result, SynthError};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use tensor_core::seed;
use track_model::{BBox, Detection};

/// Simulates predicted detections: Gaussian coordinate noise (clamped to
/// [0, 1], corners reordered if the noise flips them) and independent drops
/// with probability `p_drop`. Deterministic under `jitter_seed` for a given
/// input order.
pub fn jitter_tracks(
    tracks: &[Detection],
    sigma_pos: f64,
    p_drop: f64,
    jitter_seed: u64,
) -> Result<Vec<Detection>> {
    if sigma_pos < 0.0 || !sigma_pos.is_finite() {
        return Err(SynthError::InvalidNoise {
            reason: format!("sigma_pos {sigma_pos} must be >= 0"),
        });
    }
    if !(0.0..1.0).contains(&p_drop) {
        return Err(SynthError::InvalidNoise {
            reason: format!("p_drop {p_drop} must be in [0, 1)"),
        });
    }
    let mut rng = seed::rng(jitter_seed, "jitter");
    let mut out = Vec::with_capacity(tracks.len());
    for det in tracks {
        if rng.gen_bool(p_drop) {
            continue;
        }
        let mut coords = [det.bbox.x1, det.bbox.y1, det.bbox.x2, det.bbox.y2];
        for c in coords.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c = (*c + z * sigma_pos).clamp(0.0, 1.0);
        }
        if coords[0] > coords[2] {
            coords.swap(0, 2);
        }
        if coords[1] > coords[3] {
            coords.swap(1, 3);
        }
        out.push(Detection::new(
            det.frame_index,
            det.category,
            det.track_id,
            BBox {
                x1: coords[0],
                y1: coords[1],
                x2: coords[2],
                y2: coords[3],
            },
            det.score,
        )?);
    }
    Ok(out)
}
