use crate::detection::{Category, Detection};
use crate::error::{Result, TrackError};
use std::collections::BTreeMap;
use tensor_core::{Real, Tensor};

/// Which track occupies a slot of the object tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotInfo {
    pub category: Category,
    pub track_id: Option<u32>,
}

/// The `T x 4D` matrix of concatenated box coordinates. Slot assignment is
/// constant over the clip; unassigned slots and missing frames are all-zero.
#[derive(Clone, Debug)]
pub struct ObjectTensor<F: Real> {
    pub values: Tensor<F>,
    pub slots: Vec<Option<SlotInfo>>,
}

impl<F: Real> ObjectTensor<F> {
    pub fn frames(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn cast<G: Real>(&self) -> ObjectTensor<G> {
        ObjectTensor {
            values: self.values.cast(),
            slots: self.slots.clone(),
        }
    }
}

struct RankedTrack<'a> {
    cat_rank: u8,
    mean_score: f64,
    id_rank: u64,
    category: Category,
    track_id: Option<u32>,
    dets: Vec<&'a Detection>,
}

/// Builds the object tensor from a clip's detections.
///
/// Tracks are grouped by (category, track id). Hand slots are assigned
/// first, then object slots; within each category tracks are ranked by mean
/// confidence over the clip, descending, ties broken by smaller track id
/// (id-less tracks last). Surplus tracks are dropped. Rows are laid out
/// `[o1_x1, o1_y1, o1_x2, o1_y2, ..., oD_...]`; a track's missing frames
/// stay zero.
pub fn build_object_tensor<F: Real>(
    detections: &[Detection],
    t: usize,
    d: usize,
) -> Result<ObjectTensor<F>> {
    if d == 0 {
        return Err(TrackError::NoSlots);
    }
    for det in detections {
        det.bbox.validate()?;
        if det.frame_index >= t {
            return Err(TrackError::FrameOutOfRange {
                frame: det.frame_index,
                t,
            });
        }
    }

    // Group into tracks; BTreeMap keys make grouping independent of input order.
    let mut groups: BTreeMap<(u8, u64), Vec<&Detection>> = BTreeMap::new();
    for det in detections {
        let cat = match det.category {
            Category::Hand => 0u8,
            Category::Object => 1u8,
        };
        let id = det.track_id.map(|i| i as u64).unwrap_or(u64::MAX);
        groups.entry((cat, id)).or_default().push(det);
    }

    let mut ranked: Vec<RankedTrack> = Vec::with_capacity(groups.len());
    for ((cat_rank, id_rank), mut dets) in groups {
        // Canonical within-track order: by frame, then score descending, then
        // box coordinates, so duplicates resolve independently of input order.
        dets.sort_by(|a, b| {
            a.frame_index
                .cmp(&b.frame_index)
                .then(b.score.total_cmp(&a.score))
                .then(a.bbox.x1.total_cmp(&b.bbox.x1))
                .then(a.bbox.y1.total_cmp(&b.bbox.y1))
                .then(a.bbox.x2.total_cmp(&b.bbox.x2))
                .then(a.bbox.y2.total_cmp(&b.bbox.y2))
        });
        let mean_score = dets.iter().map(|d| d.score).sum::<f64>() / dets.len() as f64;
        ranked.push(RankedTrack {
            cat_rank,
            mean_score,
            id_rank,
            category: dets[0].category,
            track_id: dets[0].track_id,
            dets,
        });
    }
    ranked.sort_by(|a, b| {
        a.cat_rank
            .cmp(&b.cat_rank)
            .then(b.mean_score.total_cmp(&a.mean_score))
            .then(a.id_rank.cmp(&b.id_rank))
    });

    let mut values = vec![F::zero(); t * 4 * d];
    let mut slots: Vec<Option<SlotInfo>> = vec![None; d];
    for (slot, track) in ranked.into_iter().take(d).enumerate() {
        slots[slot] = Some(SlotInfo {
            category: track.category,
            track_id: track.track_id,
        });
        // First detection per frame in canonical order wins.
        let mut last_frame = usize::MAX;
        for det in track.dets {
            if det.frame_index == last_frame {
                continue;
            }
            last_frame = det.frame_index;
            let row = det.frame_index * 4 * d + 4 * slot;
            values[row] = F::from_f64(det.bbox.x1);
            values[row + 1] = F::from_f64(det.bbox.y1);
            values[row + 2] = F::from_f64(det.bbox.x2);
            values[row + 3] = F::from_f64(det.bbox.y2);
        }
    }

    Ok(ObjectTensor {
        values: Tensor::new(vec![t, 4 * d], values)?,
        slots,
    })
}
