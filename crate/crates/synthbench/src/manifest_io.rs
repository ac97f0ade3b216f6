//! Manifest text format: one record per sample,
//! `sample_id verb_name noun_name split seed`, `#` comments allowed.
//! Raw tensors dump as little-endian binary: `u32` rank, `u64` extents,
//! then row-major `f64` values.

use crate::dataset::{Manifest, ManifestEntry, Split};
use crate::error::{Result, SynthError};
use crate::vocab::Vocabulary;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use tensor_core::Tensor;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> SynthError + '_ {
    move |e| SynthError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn write_manifest(path: &Path, vocab: &Vocabulary, manifest: &Manifest) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for e in &manifest.entries {
        writeln!(
            out,
            "{} {} {} {} {}",
            e.sample_id,
            vocab.verbs[e.verb].name(),
            vocab.nouns[e.noun].name(),
            e.split,
            e.seed
        )
        .map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_manifest(path: &Path, vocab: &Vocabulary) -> Result<Manifest> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let parse_err = |msg: String| SynthError::Parse {
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
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, got {}", fields.len())));
        }
        let verb = vocab
            .verb_index(fields[1])
            .map_err(|e| parse_err(e.to_string()))?;
        let noun = vocab
            .noun_index(fields[2])
            .map_err(|e| parse_err(e.to_string()))?;
        let split: Split = fields[3].parse().map_err(parse_err)?;
        let seed: u64 = fields[4]
            .parse()
            .map_err(|e| parse_err(format!("bad seed: {e}")))?;
        entries.push(ManifestEntry {
            sample_id: fields[0].to_string(),
            verb,
            noun,
            split,
            seed,
        });
    }
    Ok(Manifest { entries })
}

pub fn dump_tensor(path: &Path, tensor: &Tensor<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    let rank = tensor.rank() as u32;
    out.write_all(&rank.to_le_bytes()).map_err(io_err(path))?;
    for &e in tensor.shape() {
        out.write_all(&(e as u64).to_le_bytes()).map_err(io_err(path))?;
    }
    for &v in tensor.data() {
        out.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn load_tensor(path: &Path) -> Result<Tensor<f64>> {
    let mut file = BufReader::new(std::fs::File::open(path).map_err(io_err(path))?);
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(io_err(path))?;
    let rank = u32::from_le_bytes(u32buf) as usize;
    let mut shape = Vec::with_capacity(rank);
    let mut u64buf = [0u8; 8];
    for _ in 0..rank {
        file.read_exact(&mut u64buf).map_err(io_err(path))?;
        shape.push(u64::from_le_bytes(u64buf) as usize);
    }
    let numel: usize = shape.iter().product();
    let mut data = Vec::with_capacity(numel);
    for _ in 0..numel {
        file.read_exact(&mut u64buf).map_err(io_err(path))?;
        data.push(f64::from_le_bytes(u64buf));
    }
    Ok(Tensor::new(shape, data)?)
}
