use crate::error::{HarnessError, Result};
use pathways::{FusionMode, PathwayConfig};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use synthbench::Split;
use track_model::TrackEncoderConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::F32 => write!(f, "f32"),
            Precision::F64 => write!(f, "f64"),
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision '{other}' (f32|f64)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Fusion(FusionMode),
    Ensemble,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunMode::Fusion(m) => write!(f, "{m}"),
            RunMode::Ensemble => write!(f, "ensemble"),
        }
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim() == "ensemble" {
            return Ok(RunMode::Ensemble);
        }
        s.parse::<FusionMode>()
            .map(RunMode::Fusion)
            .map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Synthetic,
    External,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Synthetic => write!(f, "synthetic"),
            DatasetKind::External => write!(f, "external"),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "synthetic" => Ok(DatasetKind::Synthetic),
            "external" => Ok(DatasetKind::External),
            other => Err(format!("unknown dataset kind '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub train_per_pair: usize,
    pub test_per_pair: usize,
    pub frames: usize,
    pub size: usize,
    /// Train and evaluate on the jittered track copies.
    pub noisy_tracks: bool,
    pub noise_sigma: f64,
    pub noise_drop: f64,
    pub eval_split: Split,
    pub manifest: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub videos: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            kind: DatasetKind::Synthetic,
            train_per_pair: 40,
            test_per_pair: 20,
            frames: 32,
            size: 32,
            noisy_tracks: false,
            noise_sigma: 0.02,
            noise_drop: 0.1,
            eval_split: Split::Test,
            manifest: None,
            tracks: None,
            videos: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Evaluate every N epochs (0 = only after training).
    pub eval_every: usize,
    /// Stop once the periodic evaluation reaches this top-1 (0 disables).
    pub target_top1: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lr: 0.2,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 12,
            batch_size: 16,
            eval_every: 0,
            target_top1: 0.0,
        }
    }
}

/// Fully resolved experiment description. Every field has a serialized
/// default; the text form round-trips through [`ExperimentConfig::to_text`]
/// and [`ExperimentConfig::apply_line`]; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub seed: u64,
    pub precision: Precision,
    pub lambda_rgb: f64,
    pub lambda_obj: f64,
    pub out_dir: Option<PathBuf>,
    pub ensemble_checkpoints: Vec<PathBuf>,
    pub dataset: DatasetConfig,
    pub pathway: PathwayConfig,
    pub track: TrackEncoderConfig,
    pub optim: OptimConfig,
}

pub const NUM_CLASSES: usize = 6;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: RunMode::Fusion(FusionMode::APlusMgafMO),
            seed: 1,
            precision: Precision::F64,
            lambda_rgb: 1.0,
            lambda_obj: 1.0,
            out_dir: None,
            ensemble_checkpoints: Vec::new(),
            dataset: DatasetConfig::default(),
            pathway: PathwayConfig::desk_default(NUM_CLASSES),
            track: TrackEncoderConfig::desk_default(NUM_CLASSES),
            optim: OptimConfig::default(),
        }
    }
}

fn fmt_list(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|tok| {
            tok.trim().parse::<usize>().map_err(|e| HarnessError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
                msg: e.to_string(),
            })
        })
        .collect()
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "none".to_string())
}

fn parse_path(value: &str) -> Option<PathBuf> {
    if value == "none" || value.is_empty() {
        None
    } else {
        Some(PathBuf::from(value))
    }
}

impl ExperimentConfig {
    /// Serializes every field, one `key = value` line each, in a stable
    /// order. A run writes this resolved form next to its metrics.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv(&mut s, "mode", self.mode.to_string());
        kv(&mut s, "seed", self.seed.to_string());
        kv(&mut s, "precision", self.precision.to_string());
        kv(&mut s, "lambda.rgb", self.lambda_rgb.to_string());
        kv(&mut s, "lambda.obj", self.lambda_obj.to_string());
        kv(&mut s, "out_dir", fmt_path(&self.out_dir));
        kv(
            &mut s,
            "ensemble.checkpoints",
            if self.ensemble_checkpoints.is_empty() {
                "none".to_string()
            } else {
                self.ensemble_checkpoints
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            },
        );
        kv(&mut s, "dataset.kind", self.dataset.kind.to_string());
        kv(
            &mut s,
            "dataset.train_per_pair",
            self.dataset.train_per_pair.to_string(),
        );
        kv(
            &mut s,
            "dataset.test_per_pair",
            self.dataset.test_per_pair.to_string(),
        );
        kv(&mut s, "dataset.frames", self.dataset.frames.to_string());
        kv(&mut s, "dataset.size", self.dataset.size.to_string());
        kv(
            &mut s,
            "dataset.noisy_tracks",
            self.dataset.noisy_tracks.to_string(),
        );
        kv(
            &mut s,
            "dataset.noise_sigma",
            self.dataset.noise_sigma.to_string(),
        );
        kv(
            &mut s,
            "dataset.noise_drop",
            self.dataset.noise_drop.to_string(),
        );
        kv(
            &mut s,
            "dataset.eval_split",
            self.dataset.eval_split.to_string(),
        );
        kv(&mut s, "dataset.manifest", fmt_path(&self.dataset.manifest));
        kv(&mut s, "dataset.tracks", fmt_path(&self.dataset.tracks));
        kv(&mut s, "dataset.videos", fmt_path(&self.dataset.videos));
        kv(
            &mut s,
            "pathway.frames_appearance",
            self.pathway.frames_appearance.to_string(),
        );
        kv(
            &mut s,
            "pathway.rate_ratio",
            self.pathway.rate_ratio.to_string(),
        );
        kv(
            &mut s,
            "pathway.appearance_widths",
            fmt_list(&self.pathway.appearance_widths),
        );
        kv(&mut s, "pathway.beta_div", self.pathway.beta_div.to_string());
        kv(
            &mut s,
            "pathway.blocks_per_stage",
            self.pathway.blocks_per_stage.to_string(),
        );
        kv(
            &mut s,
            "pathway.temporal_kernel",
            self.pathway.temporal_kernel.to_string(),
        );
        kv(
            &mut s,
            "pathway.spatial_kernel",
            self.pathway.spatial_kernel.to_string(),
        );
        kv(
            &mut s,
            "pathway.entry_strides",
            fmt_list(&self.pathway.entry_strides),
        );
        kv(
            &mut s,
            "pathway.mgaf_sites",
            fmt_list(&self.pathway.mgaf_sites),
        );
        kv(
            &mut s,
            "pathway.attention_width",
            self.pathway
                .attention_width
                .map(|v| v.to_string())
                .unwrap_or_else(|| "auto".to_string()),
        );
        kv(
            &mut s,
            "pathway.lateral_kernel",
            self.pathway.lateral_kernel.to_string(),
        );
        kv(&mut s, "track.layers", self.track.layers.to_string());
        kv(
            &mut s,
            "track.kernel_length",
            self.track.kernel_length.to_string(),
        );
        kv(&mut s, "track.channels", fmt_list(&self.track.channels));
        kv(&mut s, "track.num_slots", self.track.num_slots.to_string());
        kv(&mut s, "optim.lr", self.optim.lr.to_string());
        kv(&mut s, "optim.momentum", self.optim.momentum.to_string());
        kv(
            &mut s,
            "optim.weight_decay",
            self.optim.weight_decay.to_string(),
        );
        kv(&mut s, "optim.epochs", self.optim.epochs.to_string());
        kv(&mut s, "optim.batch_size", self.optim.batch_size.to_string());
        kv(&mut s, "optim.eval_every", self.optim.eval_every.to_string());
        kv(
            &mut s,
            "optim.target_top1",
            self.optim.target_top1.to_string(),
        );
        s
    }

    /// Applies one `key = value` assignment (the same syntax the config file
    /// and `--set` share). Unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| HarnessError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            msg,
        };
        macro_rules! parse {
            ($t:ty) => {
                value.parse::<$t>().map_err(|e| bad(e.to_string()))?
            };
        }
        match key {
            "mode" => self.mode = parse!(RunMode),
            "seed" => self.seed = parse!(u64),
            "precision" => self.precision = parse!(Precision),
            "lambda.rgb" => self.lambda_rgb = parse!(f64),
            "lambda.obj" => self.lambda_obj = parse!(f64),
            "out_dir" => self.out_dir = parse_path(value),
            "ensemble.checkpoints" => {
                self.ensemble_checkpoints = if value == "none" || value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|p| PathBuf::from(p.trim())).collect()
                }
            }
            "dataset.kind" => self.dataset.kind = parse!(DatasetKind),
            "dataset.train_per_pair" => self.dataset.train_per_pair = parse!(usize),
            "dataset.test_per_pair" => self.dataset.test_per_pair = parse!(usize),
            "dataset.frames" => self.dataset.frames = parse!(usize),
            "dataset.size" => self.dataset.size = parse!(usize),
            "dataset.noisy_tracks" => self.dataset.noisy_tracks = parse!(bool),
            "dataset.noise_sigma" => self.dataset.noise_sigma = parse!(f64),
            "dataset.noise_drop" => self.dataset.noise_drop = parse!(f64),
            "dataset.eval_split" => {
                self.dataset.eval_split = value.parse::<Split>().map_err(bad)?
            }
            "dataset.manifest" => self.dataset.manifest = parse_path(value),
            "dataset.tracks" => self.dataset.tracks = parse_path(value),
            "dataset.videos" => self.dataset.videos = parse_path(value),
            "pathway.frames_appearance" => self.pathway.frames_appearance = parse!(usize),
            "pathway.rate_ratio" => self.pathway.rate_ratio = parse!(usize),
            "pathway.appearance_widths" => {
                self.pathway.appearance_widths = parse_list(key, value)?
            }
            "pathway.beta_div" => self.pathway.beta_div = parse!(usize),
            "pathway.blocks_per_stage" => self.pathway.blocks_per_stage = parse!(usize),
            "pathway.temporal_kernel" => self.pathway.temporal_kernel = parse!(usize),
            "pathway.spatial_kernel" => self.pathway.spatial_kernel = parse!(usize),
            "pathway.entry_strides" => self.pathway.entry_strides = parse_list(key, value)?,
            "pathway.mgaf_sites" => self.pathway.mgaf_sites = parse_list(key, value)?,
            "pathway.attention_width" => {
                self.pathway.attention_width = if value == "auto" {
                    None
                } else {
                    Some(parse!(usize))
                }
            }
            "pathway.lateral_kernel" => self.pathway.lateral_kernel = parse!(usize),
            "track.layers" => self.track.layers = parse!(usize),
            "track.kernel_length" => self.track.kernel_length = parse!(usize),
            "track.channels" => self.track.channels = parse_list(key, value)?,
            "track.num_slots" => self.track.num_slots = parse!(usize),
            "optim.lr" => self.optim.lr = parse!(f64),
            "optim.momentum" => self.optim.momentum = parse!(f64),
            "optim.weight_decay" => self.optim.weight_decay = parse!(f64),
            "optim.epochs" => self.optim.epochs = parse!(usize),
            "optim.batch_size" => self.optim.batch_size = parse!(usize),
            "optim.eval_every" => self.optim.eval_every = parse!(usize),
            "optim.target_top1" => self.optim.target_top1 = parse!(f64),
            _ => {
                return Err(HarnessError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Parses a whole config text (`key = value` lines, `#` comments).
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::ConfigParse {
                    path: origin.to_string(),
                    line: idx + 1,
                    msg: "expected 'key = value'".to_string(),
                });
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::ConfigParse {
                    path: origin.to_string(),
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pathway.validate()?;
        self.track.validate()?;
        if self.pathway.num_classes != self.track.num_classes {
            return Err(HarnessError::Config {
                reason: "pathway and track class counts differ".into(),
            });
        }
        if self.optim.batch_size == 0 || self.optim.epochs == 0 {
            return Err(HarnessError::Config {
                reason: "optimizer needs positive epochs and batch size".into(),
            });
        }
        if self.dataset.kind == DatasetKind::External && self.dataset.manifest.is_none() {
            return Err(HarnessError::Config {
                reason: "external dataset needs dataset.manifest".into(),
            });
        }
        Ok(())
    }
}
