use crate::error::{PathwayError, Result};
use std::fmt;
use std::str::FromStr;

/// Which pathway hosts the fusion sites of a mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathwayKind {
    Appearance,
    Motion,
}

/// The ten fusion modes of the ablation grid. `A` is the low-rate appearance
/// pathway, `M` the high-rate motion pathway, `O` the object-track encoder;
/// `Concat` appends the pooled object vector to the classifier input, `Mgaf`
/// gates a pathway's features with attention over the object features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FusionMode {
    A,
    M,
    AM,
    O,
    ConcatAO,
    ConcatAMO,
    MgafAO,
    MgafMO,
    MPlusMgafAO,
    APlusMgafMO,
}

impl FusionMode {
    pub const ALL: [FusionMode; 10] = [
        FusionMode::A,
        FusionMode::M,
        FusionMode::AM,
        FusionMode::O,
        FusionMode::ConcatAO,
        FusionMode::ConcatAMO,
        FusionMode::MgafAO,
        FusionMode::MgafMO,
        FusionMode::MPlusMgafAO,
        FusionMode::APlusMgafMO,
    ];

    pub fn uses_appearance(self) -> bool {
        !matches!(self, FusionMode::M | FusionMode::O | FusionMode::MgafMO)
    }

    pub fn uses_motion(self) -> bool {
        matches!(
            self,
            FusionMode::M
                | FusionMode::AM
                | FusionMode::ConcatAMO
                | FusionMode::MgafMO
                | FusionMode::MPlusMgafAO
                | FusionMode::APlusMgafMO
        )
    }

    pub fn uses_tracks(self) -> bool {
        !matches!(self, FusionMode::A | FusionMode::M | FusionMode::AM)
    }

    /// Pathway whose blocks embed the fusion sites, if any.
    pub fn mgaf_host(self) -> Option<PathwayKind> {
        match self {
            FusionMode::MgafAO | FusionMode::MPlusMgafAO => Some(PathwayKind::Appearance),
            FusionMode::MgafMO | FusionMode::APlusMgafMO => Some(PathwayKind::Motion),
            _ => None,
        }
    }

    /// Whether the pooled object vector feeds the classifier directly.
    pub fn concats_object(self) -> bool {
        matches!(self, FusionMode::ConcatAO | FusionMode::ConcatAMO)
    }

    pub fn has_rgb_head(self) -> bool {
        self.uses_appearance() || self.uses_motion()
    }

    pub fn has_laterals(self) -> bool {
        self.uses_appearance() && self.uses_motion()
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FusionMode::A => "a",
            FusionMode::M => "m",
            FusionMode::AM => "a+m",
            FusionMode::O => "o",
            FusionMode::ConcatAO => "concat(a,o)",
            FusionMode::ConcatAMO => "concat(a+m,o)",
            FusionMode::MgafAO => "mgaf(a,o)",
            FusionMode::MgafMO => "mgaf(m,o)",
            FusionMode::MPlusMgafAO => "m+mgaf(a,o)",
            FusionMode::APlusMgafMO => "a+mgaf(m,o)",
        };
        write!(f, "{s}")
    }
}

impl FromStr for FusionMode {
    type Err = PathwayError;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
        for mode in FusionMode::ALL {
            if mode.to_string() == norm {
                return Ok(mode);
            }
        }
        Err(PathwayError::UnknownMode {
            token: s.to_string(),
        })
    }
}

/// Architecture of the dual-pathway network.
#[derive(Clone, Debug, PartialEq)]
pub struct PathwayConfig {
    /// Frames consumed by the appearance pathway (`T_A`).
    pub frames_appearance: usize,
    /// Frame-rate factor: the motion pathway consumes `rate_ratio * T_A`
    /// frames.
    pub rate_ratio: usize,
    /// Channel width per appearance stage.
    pub appearance_widths: Vec<usize>,
    /// Channel divisor: motion widths are `appearance_widths / beta_div`.
    pub beta_div: usize,
    pub blocks_per_stage: usize,
    /// Temporal kernel length `t` of the in-block `t x 1 x 1` convolutions.
    pub temporal_kernel: usize,
    /// Spatial kernel size `k` of the in-block `1 x k x k` convolutions.
    pub spatial_kernel: usize,
    /// Spatial stride of each stage's entry convolution.
    pub entry_strides: Vec<usize>,
    /// 1-based block indices (global across stages) hosting fusion sites.
    pub mgaf_sites: Vec<usize>,
    /// Attention width `C`; `None` means `min(C_M, C_U)` per site.
    pub attention_width: Option<usize>,
    pub num_classes: usize,
    /// Temporal kernel of the time-strided lateral conv-fusion connections.
    pub lateral_kernel: usize,
}

impl PathwayConfig {
    /// The pinned desk-scale configuration: 32-frame clips, two stages,
    /// appearance at T_A = 4 with widths [32, 64], motion eight times faster
    /// and eight times narrower, fusion at every motion block.
    pub fn desk_default(num_classes: usize) -> Self {
        PathwayConfig {
            frames_appearance: 4,
            rate_ratio: 8,
            appearance_widths: vec![32, 64],
            beta_div: 8,
            blocks_per_stage: 2,
            temporal_kernel: 3,
            spatial_kernel: 3,
            entry_strides: vec![1, 2],
            mgaf_sites: vec![1, 2, 3, 4],
            attention_width: None,
            num_classes,
            lateral_kernel: 5,
        }
    }

    pub fn stages(&self) -> usize {
        self.appearance_widths.len()
    }

    pub fn total_blocks(&self) -> usize {
        self.stages() * self.blocks_per_stage
    }

    pub fn frames_motion(&self) -> usize {
        self.rate_ratio * self.frames_appearance
    }

    pub fn motion_widths(&self) -> Vec<usize> {
        self.appearance_widths
            .iter()
            .map(|w| w / self.beta_div)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(PathwayError::InvalidConfig { reason });
        if self.frames_appearance == 0 || self.rate_ratio == 0 {
            return fail("frame counts must be positive".into());
        }
        if self.appearance_widths.is_empty() {
            return fail("at least one stage required".into());
        }
        if self.beta_div == 0 {
            return fail("beta divisor must be positive".into());
        }
        for &w in &self.appearance_widths {
            if w == 0 || w % self.beta_div != 0 {
                return fail(format!(
                    "appearance width {w} not divisible by beta divisor {}",
                    self.beta_div
                ));
            }
        }
        if self.entry_strides.len() != self.stages() {
            return fail(format!(
                "{} entry strides for {} stages",
                self.entry_strides.len(),
                self.stages()
            ));
        }
        if self.entry_strides.iter().any(|&s| s == 0) {
            return fail("entry strides must be positive".into());
        }
        if self.blocks_per_stage == 0 {
            return fail("blocks_per_stage must be positive".into());
        }
        for (name, k) in [
            ("temporal", self.temporal_kernel),
            ("spatial", self.spatial_kernel),
            ("lateral", self.lateral_kernel),
        ] {
            if k == 0 || k % 2 == 0 {
                return fail(format!("{name} kernel {k} must be odd"));
            }
        }
        let max_site = self.total_blocks();
        for &s in &self.mgaf_sites {
            if s == 0 || s > max_site {
                return fail(format!("fusion site {s} outside 1..={max_site}"));
            }
        }
        if self.num_classes == 0 {
            return fail("num_classes must be positive".into());
        }
        Ok(())
    }
}
