use crate::error::{Result, TrackError};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Hand,
    Object,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Hand => write!(f, "hand"),
            Category::Object => write!(f, "object"),
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hand" => Ok(Category::Hand),
            "object" => Ok(Category::Object),
            other => Err(format!("unknown category '{other}'")),
        }
    }
}

/// Axis-aligned box in normalized [0, 1] image coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let b = BBox { x1, y1, x2, y2 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let BBox { x1, y1, x2, y2 } = *self;
        let err = |reason| TrackError::InvalidBBox {
            x1,
            y1,
            x2,
            y2,
            reason,
        };
        for v in [x1, y1, x2, y2] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(err("coordinate outside [0, 1]"));
            }
        }
        if x1 > x2 {
            return Err(err("x1 > x2"));
        }
        if y1 > y2 {
            return Err(err("y1 > y2"));
        }
        Ok(())
    }
}

/// One per-frame detection of a tracked hand or object.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub frame_index: usize,
    pub category: Category,
    pub track_id: Option<u32>,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(
        frame_index: usize,
        category: Category,
        track_id: Option<u32>,
        bbox: BBox,
        score: f64,
    ) -> Result<Self> {
        bbox.validate()?;
        if !(0.0..=1.0).contains(&score) || !score.is_finite() {
            return Err(TrackError::InvalidScore { score });
        }
        Ok(Detection {
            frame_index,
            category,
            track_id,
            bbox,
            score,
        })
    }
}
