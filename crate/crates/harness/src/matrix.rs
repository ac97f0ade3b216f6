use crate::config::{ExperimentConfig, RunMode};
use crate::error::{HarnessError, Result};
use crate::metrics::MetricsReport;
use crate::train::run_experiment;
use pathways::FusionMode;
use std::fmt::Write as _;
use std::path::Path;

pub struct MatrixCell {
    pub mode: FusionMode,
    pub run_seed: u64,
    pub report: MetricsReport,
}

pub struct MatrixResult {
    pub cells: Vec<MatrixCell>,
    pub table_csv: String,
}

fn stats(values: &[f64]) -> (f64, f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

/// Runs every (mode, seed) cell and renders the comparison table: one row
/// per mode in the requested order, mean and range over seeds.
pub fn run_matrix(
    base: &ExperimentConfig,
    modes: &[FusionMode],
    seeds: &[u64],
) -> Result<MatrixResult> {
    if modes.is_empty() || seeds.is_empty() {
        return Err(HarnessError::Config {
            reason: "matrix needs at least one mode and one seed".into(),
        });
    }
    let mut cells = Vec::with_capacity(modes.len() * seeds.len());
    for &mode in modes {
        for &run_seed in seeds {
            let mut cfg = base.clone();
            cfg.mode = RunMode::Fusion(mode);
            cfg.seed = run_seed;
            cfg.out_dir = base.out_dir.as_ref().map(|d| {
                d.join(format!("{}_seed{}", mode_slug(mode), run_seed))
            });
            let report = run_experiment(&cfg)?;
            cells.push(MatrixCell {
                mode,
                run_seed,
                report,
            });
        }
    }

    let mut table = String::new();
    writeln!(
        table,
        "mode,seeds,top1_mean,top1_min,top1_max,top5_mean,macro_mean,param_count"
    )
    .expect("string write");
    for &mode in modes {
        let rows: Vec<&MatrixCell> = cells.iter().filter(|c| c.mode == mode).collect();
        let top1: Vec<f64> = rows.iter().map(|c| c.report.top1).collect();
        let top5: Vec<f64> = rows.iter().map(|c| c.report.top5).collect();
        let macro_r: Vec<f64> = rows.iter().map(|c| c.report.macro_recall).collect();
        let (t1m, t1lo, t1hi) = stats(&top1);
        let (t5m, _, _) = stats(&top5);
        let (mm, _, _) = stats(&macro_r);
        writeln!(
            table,
            "{},{},{},{},{},{},{},{}",
            mode,
            rows.len(),
            t1m,
            t1lo,
            t1hi,
            t5m,
            mm,
            rows[0].report.param_count
        )
        .expect("string write");
    }

    if let Some(dir) = &base.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join("matrix.csv");
        std::fs::write(&path, &table).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(MatrixResult {
        cells,
        table_csv: table,
    })
}

/// Filesystem-safe mode token (`a+mgaf(m,o)` -> `a_mgaf_m_o`).
pub fn mode_slug(mode: FusionMode) -> String {
    mode.to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// Parses a comma-separated mode list, preserving order.
pub fn parse_modes(spec: &str) -> Result<Vec<FusionMode>> {
    spec.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<FusionMode>()
                .map_err(HarnessError::from)
        })
        .collect()
}

pub fn write_table(path: &Path, table: &str) -> Result<()> {
    std::fs::write(path, table).map_err(|e| HarnessError::io(path, e))
}
