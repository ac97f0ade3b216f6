//! Line-delimited track files: one detection per line,
//! `video_id frame_index category track_id x1 y1 x2 y2 score`,
//! with `-` standing for a missing track id. The loader validates every
//! invariant and reports offending line numbers.

use crate::detection::{BBox, Category, Detection};
use crate::error::{Result, TrackError};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub fn write_track_file(path: &Path, records: &[(String, Detection)]) -> Result<()> {
    let io_err = |e: std::io::Error| TrackError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    for (video_id, det) in records {
        let tid = match det.track_id {
            Some(id) => id.to_string(),
            None => "-".to_string(),
        };
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            video_id,
            det.frame_index,
            det.category,
            tid,
            det.bbox.x1,
            det.bbox.y1,
            det.bbox.x2,
            det.bbox.y2,
            det.score
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_track_file(path: &Path) -> Result<Vec<(String, Detection)>> {
    let file = std::fs::File::open(path).map_err(|e| TrackError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let parse_err = |msg: String| TrackError::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg,
        };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(parse_err(format!("expected 9 fields, got {}", fields.len())));
        }
        let video_id = fields[0].to_string();
        let frame_index: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(format!("bad frame index: {e}")))?;
        let category: Category = fields[2].parse().map_err(parse_err)?;
        let track_id = if fields[3] == "-" {
            None
        } else {
            Some(
                fields[3]
                    .parse::<u32>()
                    .map_err(|e| parse_err(format!("bad track id: {e}")))?,
            )
        };
        let mut coords = [0.0f64; 4];
        for (i, c) in coords.iter_mut().enumerate() {
            *c = fields[4 + i]
                .parse()
                .map_err(|e| parse_err(format!("bad coordinate: {e}")))?;
        }
        let score: f64 = fields[8]
            .parse()
            .map_err(|e| parse_err(format!("bad score: {e}")))?;
        let bbox = BBox::new(coords[0], coords[1], coords[2], coords[3])
            .map_err(|e| parse_err(e.to_string()))?;
        let det = Detection::new(frame_index, category, track_id, bbox, score)
            .map_err(|e| parse_err(e.to_string()))?;
        records.push((video_id, det));
    }
    Ok(records)
}

/// Groups loaded records by video id, preserving file order within a video.
pub fn group_by_video(records: Vec<(String, Detection)>) -> BTreeMap<String, Vec<Detection>> {
    let mut map: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (vid, det) in records {
        map.entry(vid).or_default().push(det);
    }
    map
}
