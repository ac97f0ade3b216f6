//! Procedural interaction-video benchmark.
//!
//! Tiny rendered clips of a hand and an object executing one of six motion
//! programs (the verb — also the class label) with appearance drawn from one
//! of eight styling programs (the noun — pure nuisance). Verb-noun pairs are
//! split compositionally: the pairs seen in training are disjoint from the
//! test pairs while every verb and every noun appears in both, so a model
//! must read the motion, not memorize looks.

mod dataset;
mod error;
mod jitter;
mod manifest_io;
mod render;
mod split;
mod vocab;

pub use dataset::{
    generate_manifest, materialize, sample_seed, Manifest, ManifestEntry, NoisePreset, Split,
};
pub use error::{Result, SynthError};
pub use jitter::jitter_tracks;
pub use manifest_io::{dump_tensor, load_tensor, read_manifest, write_manifest};
pub use render::{
    render_sample, trajectories, RenderConfig, SyntheticSample, HAND_HALF, OBJECT_HALF,
};
pub use split::{make_split, CompositionalSplit};
pub use vocab::{Noun, Shape, Texture, Verb, Vocabulary};
