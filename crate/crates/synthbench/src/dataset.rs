use crate::error::Result;
use crate::jitter::jitter_tracks;
use crate::render::{render_sample, RenderConfig, SyntheticSample};
use crate::split::{make_split, CompositionalSplit};
use crate::vocab::Vocabulary;
use std::fmt;
use std::str::FromStr;
use tensor_core::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

/// Detection-noise preset for the predicted-detections experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisePreset {
    pub sigma_pos: f64,
    pub p_drop: f64,
}

impl Default for NoisePreset {
    fn default() -> Self {
        NoisePreset {
            sigma_pos: 0.02,
            p_drop: 0.1,
        }
    }
}

/// One manifest record; everything needed to regenerate the sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub verb: usize,
    pub noun: usize,
    pub split: Split,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

/// Deterministic per-sample seed from (root, pair, index, split), so samples
/// can be produced on demand and in parallel without order effects.
pub fn sample_seed(root: u64, verb: usize, noun: usize, index: usize, split: Split) -> u64 {
    let packed = ((split == Split::Test) as u64) << 62
        | ((verb as u64) & 0x3F) << 48
        | ((noun as u64) & 0xFF) << 40
        | (index as u64) & 0xFF_FFFF_FFFF;
    seed::child_seed_indexed(root, "sample", packed)
}

/// Builds the balanced manifest over a compositional split: `train_per_pair`
/// samples for every train pair, `test_per_pair` for every test pair.
pub fn generate_manifest(
    vocab: &Vocabulary,
    root_seed: u64,
    train_per_pair: usize,
    test_per_pair: usize,
) -> Result<(CompositionalSplit, Manifest)> {
    let split = make_split(vocab, root_seed)?;
    let mut entries = Vec::new();
    for (pairs, split_kind, per_pair) in [
        (&split.train_pairs, Split::Train, train_per_pair),
        (&split.test_pairs, Split::Test, test_per_pair),
    ] {
        for &(verb, noun) in pairs.iter() {
            for index in 0..per_pair {
                entries.push(ManifestEntry {
                    sample_id: format!(
                        "{}-{}-{}-{:03}",
                        split_kind,
                        vocab.verbs[verb].name(),
                        vocab.nouns[noun].name(),
                        index
                    ),
                    verb,
                    noun,
                    split: split_kind,
                    seed: sample_seed(root_seed, verb, noun, index, split_kind),
                });
            }
        }
    }
    Ok((split, Manifest { entries }))
}

/// Regenerates one sample from its manifest entry; with a noise preset, the
/// jittered track copy is filled in (its randomness derives from the sample
/// seed, independent of the trajectory stream).
pub fn materialize(
    vocab: &Vocabulary,
    render_cfg: &RenderConfig,
    entry: &ManifestEntry,
    noise: Option<NoisePreset>,
) -> Result<SyntheticSample> {
    let mut sample = render_sample(vocab, entry.verb, entry.noun, entry.seed, render_cfg)?;
    if let Some(preset) = noise {
        let noise_seed = seed::child_seed(entry.seed, "detector-noise");
        sample.noisy_tracks = Some(jitter_tracks(
            &sample.tracks,
            preset.sigma_pos,
            preset.p_drop,
            noise_seed,
        )?);
    }
    Ok(sample)
}
