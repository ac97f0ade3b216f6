use crate::config::{DatasetKind, ExperimentConfig, RunMode};
use crate::error::{HarnessError, Result};
use rayon::prelude::*;
use synthbench::{
    generate_manifest, materialize, read_manifest, Manifest, NoisePreset, RenderConfig, Split,
    Vocabulary,
};
use tensor_core::{seed, Real, Tensor};
use track_model::{build_object_tensor, group_by_video, read_track_file, ObjectTensor};

/// One ready-to-train sample. The video is omitted when the mode never looks
/// at pixels.
pub struct LoadedSample<F: Real> {
    pub id: String,
    pub video: Option<Tensor<F>>,
    pub tracks: ObjectTensor<F>,
    pub label: usize,
}

pub struct LoadedDataset<F: Real> {
    pub train: Vec<LoadedSample<F>>,
    pub eval: Vec<LoadedSample<F>>,
    pub num_classes: usize,
}

fn needs_video(cfg: &ExperimentConfig) -> bool {
    match cfg.mode {
        RunMode::Fusion(m) => m.uses_appearance() || m.uses_motion(),
        RunMode::Ensemble => true,
    }
}

/// Materializes the configured dataset. Synthetic data is regenerated from
/// (seed, pair, index) — nothing is read from disk; external data loads the
/// manifest, track file, and (when needed) raw video dumps.
pub fn load_dataset<F: Real>(cfg: &ExperimentConfig) -> Result<LoadedDataset<F>> {
    let vocab = Vocabulary::default();
    match cfg.dataset.kind {
        DatasetKind::Synthetic => {
            let gen_seed = seed::child_seed(cfg.seed, "gen");
            let (_, manifest) = generate_manifest(
                &vocab,
                gen_seed,
                cfg.dataset.train_per_pair,
                cfg.dataset.test_per_pair,
            )?;
            build_synthetic(cfg, &vocab, &manifest)
        }
        DatasetKind::External => load_external(cfg, &vocab),
    }
}

fn build_synthetic<F: Real>(
    cfg: &ExperimentConfig,
    vocab: &Vocabulary,
    manifest: &Manifest,
) -> Result<LoadedDataset<F>> {
    let render = RenderConfig {
        frames: cfg.dataset.frames,
        size: cfg.dataset.size,
    };
    let noise = cfg.dataset.noisy_tracks.then(|| NoisePreset {
        sigma_pos: cfg.dataset.noise_sigma,
        p_drop: cfg.dataset.noise_drop,
    });
    let keep_video = needs_video(cfg);
    let d = cfg.track.num_slots;

    let build = |entries: Vec<&synthbench::ManifestEntry>| -> Result<Vec<LoadedSample<F>>> {
        entries
            .into_par_iter()
            .map(|entry| {
                let sample = materialize(vocab, &render, entry, noise)?;
                let dets = sample
                    .noisy_tracks
                    .as_deref()
                    .unwrap_or(&sample.tracks);
                let tracks = build_object_tensor::<F>(dets, render.frames, d)?;
                Ok(LoadedSample {
                    id: entry.sample_id.clone(),
                    video: keep_video.then(|| sample.video.cast::<F>()),
                    tracks,
                    label: sample.verb,
                })
            })
            .collect()
    };

    let train = build(manifest.split_entries(Split::Train).collect())?;
    let eval_split = cfg.dataset.eval_split;
    let eval = build(manifest.split_entries(eval_split).collect())?;
    Ok(LoadedDataset {
        train,
        eval,
        num_classes: vocab.num_verbs(),
    })
}

fn load_external<F: Real>(
    cfg: &ExperimentConfig,
    vocab: &Vocabulary,
) -> Result<LoadedDataset<F>> {
    let manifest_path = cfg.dataset.manifest.as_ref().ok_or(HarnessError::Config {
        reason: "external dataset needs dataset.manifest".into(),
    })?;
    let manifest = read_manifest(manifest_path, vocab)?;
    let tracks_path = cfg.dataset.tracks.as_ref().ok_or(HarnessError::Config {
        reason: "external dataset needs dataset.tracks".into(),
    })?;
    let mut by_video = group_by_video(read_track_file(tracks_path)?);
    let keep_video = needs_video(cfg);
    let d = cfg.track.num_slots;

    let mut load = |entries: Vec<&synthbench::ManifestEntry>| -> Result<Vec<LoadedSample<F>>> {
        let mut out = Vec::with_capacity(entries.len());
        for entry in entries {
            let dets = by_video
                .remove(&entry.sample_id)
                .ok_or_else(|| HarnessError::Dataset {
                    reason: format!("no tracks for sample {}", entry.sample_id),
                })?;
            let tracks = build_object_tensor::<F>(&dets, cfg.dataset.frames, d)?;
            let video = if keep_video {
                let dir = cfg.dataset.videos.as_ref().ok_or(HarnessError::Config {
                    reason: "this mode needs dataset.videos".into(),
                })?;
                let t = synthbench::load_tensor(&dir.join(format!("{}.bin", entry.sample_id)))?;
                Some(t.cast::<F>())
            } else {
                None
            };
            out.push(LoadedSample {
                id: entry.sample_id.clone(),
                video,
                tracks,
                label: entry.verb,
            });
        }
        Ok(out)
    };

    let train = load(manifest.split_entries(Split::Train).collect())?;
    let eval = load(manifest.split_entries(cfg.dataset.eval_split).collect())?;
    Ok(LoadedDataset {
        train,
        eval,
        num_classes: vocab.num_verbs(),
    })
}
