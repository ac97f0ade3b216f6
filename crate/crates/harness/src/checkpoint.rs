//! Versioned binary checkpoint: magic `MGCK`, `u32` version, the resolved
//! config text, then each named parameter tensor as (name, shape, f64 data),
//! all little-endian. Values are stored in f64 so both precisions round-trip
//! exactly.

use crate::config::{ExperimentConfig, RunMode};
use crate::error::{HarnessError, Result};
use pathways::Model;
use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;
use tensor_core::Real;

const MAGIC: &[u8; 4] = b"MGCK";
const VERSION: u32 = 1;

pub fn save_checkpoint<F: Real>(
    path: &Path,
    cfg: &ExperimentConfig,
    model: &Model<F>,
) -> Result<()> {
    let werr = |e: std::io::Error| HarnessError::io(path, e);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(werr)?);
    out.write_all(MAGIC).map_err(werr)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(werr)?;
    let config_text = cfg.to_text();
    out.write_all(&(config_text.len() as u32).to_le_bytes())
        .map_err(werr)?;
    out.write_all(config_text.as_bytes()).map_err(werr)?;
    out.write_all(&(model.store.len() as u64).to_le_bytes())
        .map_err(werr)?;
    for (_, name, tensor) in model.store.iter() {
        out.write_all(&(name.len() as u32).to_le_bytes())
            .map_err(werr)?;
        out.write_all(name.as_bytes()).map_err(werr)?;
        out.write_all(&(tensor.rank() as u32).to_le_bytes())
            .map_err(werr)?;
        for &e in tensor.shape() {
            out.write_all(&(e as u64).to_le_bytes()).map_err(werr)?;
        }
        for &v in tensor.data() {
            out.write_all(&v.to_double().to_le_bytes()).map_err(werr)?;
        }
    }
    out.flush().map_err(werr)?;
    Ok(())
}

pub struct RawCheckpoint {
    pub config: ExperimentConfig,
    pub params: Vec<(String, Vec<usize>, Vec<f64>)>,
}

pub fn read_checkpoint(path: &Path) -> Result<RawCheckpoint> {
    let rerr = |e: std::io::Error| HarnessError::io(path, e);
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(rerr)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(rerr)?;
    if &magic != MAGIC {
        return Err(HarnessError::Checkpoint {
            path: path.display().to_string(),
            reason: "bad magic".into(),
        });
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    file.read_exact(&mut u32buf).map_err(rerr)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(HarnessError::CheckpointVersion {
            found: version,
            expected: VERSION,
        });
    }
    file.read_exact(&mut u32buf).map_err(rerr)?;
    let config_len = u32::from_le_bytes(u32buf) as usize;
    let mut config_bytes = vec![0u8; config_len];
    file.read_exact(&mut config_bytes).map_err(rerr)?;
    let config_text = String::from_utf8(config_bytes).map_err(|e| HarnessError::Checkpoint {
        path: path.display().to_string(),
        reason: format!("config not utf-8: {e}"),
    })?;
    let mut config = ExperimentConfig::default();
    config.apply_text(&config_text, &format!("{}#config", path.display()))?;

    file.read_exact(&mut u64buf).map_err(rerr)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        file.read_exact(&mut u32buf).map_err(rerr)?;
        let name_len = u32::from_le_bytes(u32buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        file.read_exact(&mut name_bytes).map_err(rerr)?;
        let name = String::from_utf8(name_bytes).map_err(|e| HarnessError::Checkpoint {
            path: path.display().to_string(),
            reason: format!("parameter name not utf-8: {e}"),
        })?;
        file.read_exact(&mut u32buf).map_err(rerr)?;
        let rank = u32::from_le_bytes(u32buf) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            file.read_exact(&mut u64buf).map_err(rerr)?;
            shape.push(u64::from_le_bytes(u64buf) as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            file.read_exact(&mut u64buf).map_err(rerr)?;
            data.push(f64::from_le_bytes(u64buf));
        }
        params.push((name, shape, data));
    }
    Ok(RawCheckpoint { config, params })
}

/// Rebuilds the model a checkpoint describes and restores its weights.
/// Missing or unexpected parameter names are each listed in the error.
pub fn load_model<F: Real>(path: &Path) -> Result<(ExperimentConfig, Model<F>)> {
    let raw = read_checkpoint(path)?;
    let RunMode::Fusion(mode) = raw.config.mode else {
        return Err(HarnessError::Checkpoint {
            path: path.display().to_string(),
            reason: "checkpoint holds an ensemble config, not a model".into(),
        });
    };
    let mut model = Model::<F>::build(
        mode,
        raw.config.pathway.clone(),
        raw.config.track.clone(),
        raw.config.seed,
    )?;

    let expected: BTreeSet<String> = model.store.iter().map(|(_, n, _)| n.to_string()).collect();
    let found: BTreeSet<String> = raw.params.iter().map(|(n, _, _)| n.clone()).collect();
    if expected != found {
        let missing: Vec<_> = expected.difference(&found).cloned().collect();
        let unexpected: Vec<_> = found.difference(&expected).cloned().collect();
        return Err(HarnessError::CheckpointParams {
            missing: missing.join(", "),
            unexpected: unexpected.join(", "),
        });
    }
    for (name, shape, data) in raw.params {
        let id = model.store.find(&name).expect("name checked above");
        if model.store.get(id).shape() != shape.as_slice() {
            return Err(HarnessError::Checkpoint {
                path: path.display().to_string(),
                reason: format!(
                    "shape mismatch for {name}: file {:?} vs model {:?}",
                    shape,
                    model.store.get(id).shape()
                ),
            });
        }
        let cast: Vec<F> = data.into_iter().map(F::from_f64).collect();
        model.store.set_values(id, cast)?;
    }
    Ok((raw.config, model))
}
