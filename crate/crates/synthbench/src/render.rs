use crate::error::{Result, SynthError};
use crate::vocab::{Noun, Shape, Texture, Verb, Vocabulary};
use rand::Rng;
use std::f64::consts::TAU;
use tensor_core::{seed, Tensor};
use track_model::{BBox, Category, Detection};

pub const OBJECT_HALF: f64 = 4.0;
pub const HAND_HALF: f64 = 3.0;
const BACKGROUND: f64 = 0.08;
const HAND_COLOR: [f64; 3] = [0.85, 0.65, 0.45];
const SUBSAMPLES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderConfig {
    pub frames: usize,
    pub size: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            frames: 32,
            size: 32,
        }
    }
}

/// One rendered clip with its ground-truth tracks and (verb, noun) label.
/// The verb index is the class label; the noun only styles the sprite.
#[derive(Clone, Debug)]
pub struct SyntheticSample {
    pub video: Tensor<f64>,
    pub tracks: Vec<Detection>,
    pub noisy_tracks: Option<Vec<Detection>>,
    pub verb: usize,
    pub noun: usize,
}

/// Per-frame sprite centers for the hand and the object. Derived only from
/// (verb, seed): identical for every noun.
pub fn trajectories(verb: Verb, sample_seed: u64, cfg: &RenderConfig) -> Vec<((f64, f64), (f64, f64))> {
    let mut rng = seed::rng(sample_seed, "trajectory");
    let t_count = cfg.frames;
    let steps = |i: usize| i as f64 / (t_count.max(2) - 1) as f64;
    let mut frames = Vec::with_capacity(t_count);
    match verb {
        Verb::Lift => {
            let x0 = rng.gen_range(10.0..22.0);
            let y0 = rng.gen_range(21.0..24.0);
            let dy = rng.gen_range(11.0..14.0);
            for i in 0..t_count {
                let s = steps(i);
                let obj = (x0, y0 - dy * s);
                let hand = ((x0 - 7.5f64).max(4.0), obj.1 + 1.5);
                frames.push((hand, obj));
            }
        }
        Verb::Drop => {
            let x0 = rng.gen_range(10.0..22.0);
            let y0 = rng.gen_range(8.0..11.0);
            let dy = rng.gen_range(11.0..14.0);
            for i in 0..t_count {
                let s = steps(i);
                let obj = (x0, y0 + dy * s);
                let hand = ((x0 - 7.5f64).max(4.0), obj.1 - 1.5);
                frames.push((hand, obj));
            }
        }
        Verb::Shake => {
            let x0 = rng.gen_range(12.0..20.0);
            let y0 = rng.gen_range(12.0..20.0);
            let amp = rng.gen_range(3.0..5.0);
            let freq = if rng.gen_bool(0.5) { 2.0 } else { 3.0 };
            for i in 0..t_count {
                let s = steps(i);
                let obj = (x0 + amp * (TAU * freq * s).sin(), y0);
                let hand = (x0, (y0 + 7.5f64).min(28.0));
                frames.push((hand, obj));
            }
        }
        Verb::ApproachHand => {
            let x0 = rng.gen_range(20.0..24.0);
            let y0 = rng.gen_range(12.0..20.0);
            let hx0 = rng.gen_range(4.5..6.5);
            let hy0 = rng.gen_range(4.5..6.5);
            let target = (x0 - 7.5, y0);
            for i in 0..t_count {
                let s = steps(i);
                let hand = (hx0 + (target.0 - hx0) * s, hy0 + (target.1 - hy0) * s);
                frames.push((hand, (x0, y0)));
            }
        }
        Verb::RotateAround => {
            let cx = rng.gen_range(13.0..19.0);
            let cy = rng.gen_range(13.0..19.0);
            let r = rng.gen_range(5.0..7.0);
            let theta0 = rng.gen_range(0.0..TAU);
            let revs = rng.gen_range(1.0..1.5);
            let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            for i in 0..t_count {
                let s = steps(i);
                let theta = theta0 + dir * TAU * revs * s;
                let obj = (cx + r * theta.cos(), cy + r * theta.sin());
                frames.push(((cx, cy), obj));
            }
        }
        Verb::SlideBehind => {
            let y0 = rng.gen_range(13.0..19.0);
            let from = rng.gen_range(6.0..7.5);
            let to = rng.gen_range(24.5..26.0);
            for i in 0..t_count {
                let s = steps(i);
                let obj = (from + (to - from) * s, y0);
                frames.push(((16.0, y0), obj));
            }
        }
    }
    frames
}

struct Sprite {
    center: (f64, f64),
    half: f64,
    shape: Shape,
    color: [f64; 3],
    texture: Texture,
}

fn draw(frame: &mut [f64], size: usize, sprite: &Sprite) {
    let (cx, cy) = sprite.center;
    let half = sprite.half;
    let x_lo = ((cx - half).floor().max(0.0)) as usize;
    let y_lo = ((cy - half).floor().max(0.0)) as usize;
    let x_hi = ((cx + half).ceil().min(size as f64)) as usize;
    let y_hi = ((cy + half).ceil().min(size as f64)) as usize;
    let sub = SUBSAMPLES as f64;
    for py in y_lo..y_hi {
        for px in x_lo..x_hi {
            let mut hits = 0usize;
            let mut acc = [0.0f64; 3];
            for sy in 0..SUBSAMPLES {
                for sx in 0..SUBSAMPLES {
                    let x = px as f64 + (sx as f64 + 0.5) / sub;
                    let y = py as f64 + (sy as f64 + 0.5) / sub;
                    if (x - cx).abs() > half || (y - cy).abs() > half {
                        continue;
                    }
                    // Sprite-local coordinates in [0, 1].
                    let u = (x - (cx - half)) / (2.0 * half);
                    let v = (y - (cy - half)) / (2.0 * half);
                    let inside = match sprite.shape {
                        Shape::Square => true,
                        Shape::Circle => {
                            (u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5) <= 0.25
                        }
                    };
                    if !inside {
                        continue;
                    }
                    let texel = match sprite.texture {
                        Texture::Solid => sprite.color,
                        Texture::Checker => {
                            let cell =
                                ((u * 4.0).floor() as i64 + (v * 4.0).floor() as i64) & 1;
                            if cell == 0 {
                                sprite.color
                            } else {
                                [
                                    sprite.color[0] * 0.35,
                                    sprite.color[1] * 0.35,
                                    sprite.color[2] * 0.35,
                                ]
                            }
                        }
                    };
                    hits += 1;
                    for (a, t) in acc.iter_mut().zip(texel) {
                        *a += t;
                    }
                }
            }
            if hits == 0 {
                continue;
            }
            let coverage = hits as f64 / (sub * sub);
            let base = (py * size + px) * 3;
            for ch in 0..3 {
                let color = acc[ch] / hits as f64;
                frame[base + ch] = frame[base + ch] * (1.0 - coverage) + color * coverage;
            }
        }
    }
}

fn sprite_bbox(center: (f64, f64), half: f64, size: usize) -> BBox {
    let s = size as f64;
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    BBox {
        x1: clamp((center.0 - half) / s),
        y1: clamp((center.1 - half) / s),
        x2: clamp((center.0 + half) / s),
        y2: clamp((center.1 + half) / s),
    }
}

/// Renders one sample. Trajectories depend only on (verb, seed); the noun
/// styles the object sprite. Pixel values stay in [0, 1]; the hand draws on
/// top so sliding objects pass behind it.
pub fn render_sample(
    vocab: &Vocabulary,
    verb: usize,
    noun: usize,
    sample_seed: u64,
    cfg: &RenderConfig,
) -> Result<SyntheticSample> {
    let verb_prog: Verb = *vocab
        .verbs
        .get(verb)
        .ok_or(SynthError::IndexOutOfRange {
            kind: "verb",
            index: verb,
            len: vocab.num_verbs(),
        })?;
    let noun_prog: &Noun = vocab.nouns.get(noun).ok_or(SynthError::IndexOutOfRange {
        kind: "noun",
        index: noun,
        len: vocab.num_nouns(),
    })?;

    let frames = trajectories(verb_prog, sample_seed, cfg);
    let size = cfg.size;
    let mut video = vec![BACKGROUND; cfg.frames * size * size * 3];
    let mut tracks = Vec::with_capacity(cfg.frames * 2);
    for (t, &(hand, obj)) in frames.iter().enumerate() {
        let frame = &mut video[t * size * size * 3..(t + 1) * size * size * 3];
        draw(
            frame,
            size,
            &Sprite {
                center: obj,
                half: OBJECT_HALF,
                shape: noun_prog.shape,
                color: noun_prog.color,
                texture: noun_prog.texture,
            },
        );
        // Hand last: always on top.
        draw(
            frame,
            size,
            &Sprite {
                center: hand,
                half: HAND_HALF,
                shape: Shape::Square,
                color: HAND_COLOR,
                texture: Texture::Solid,
            },
        );
        tracks.push(Detection::new(
            t,
            Category::Hand,
            Some(0),
            sprite_bbox(hand, HAND_HALF, size),
            1.0,
        )?);
        tracks.push(Detection::new(
            t,
            Category::Object,
            Some(1),
            sprite_bbox(obj, OBJECT_HALF, size),
            1.0,
        )?);
    }

    Ok(SyntheticSample {
        video: Tensor::new(vec![cfg.frames, size, size, 3], video)?,
        tracks,
        noisy_tracks: None,
        verb,
        noun,
    })
}
