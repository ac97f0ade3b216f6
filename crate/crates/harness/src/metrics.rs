use crate::error::{HarnessError, Result};
use std::io::Write;
use std::path::Path;

/// Evaluation summary. `wall_clock_secs` is measured but deliberately left
/// out of the metrics file so identical runs produce byte-identical files.
#[derive(Clone, Debug, Default)]
pub struct MetricsReport {
    pub top1: f64,
    pub top5: f64,
    pub micro: f64,
    pub macro_recall: f64,
    /// Per-class recall; `None` for classes with no ground-truth instances.
    pub per_class_recall: Vec<Option<f64>>,
    pub loss_curve: Vec<f64>,
    pub param_count: usize,
    pub wall_clock_secs: f64,
}

/// Rank of the true class under "ties broken by smaller class index":
/// the number of strictly larger logits plus earlier equal ones.
fn label_rank(row: &[f64], label: usize) -> usize {
    let target = row[label];
    let mut rank = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > target || (v == target && j < label) {
            rank += 1;
        }
    }
    rank
}

/// Top-1/top-k accuracy, micro accuracy, and macro-recall (mean of per-class
/// recalls over classes with at least one instance). `k` clamps to the class
/// count.
pub fn compute_metrics(logits: &[Vec<f64>], labels: &[usize], top_k: usize) -> Result<MetricsReport> {
    if logits.is_empty() || logits.len() != labels.len() {
        return Err(HarnessError::Metrics {
            reason: format!(
                "need matching non-empty logits/labels, got {} and {}",
                logits.len(),
                labels.len()
            ),
        });
    }
    let classes = logits[0].len();
    let k = top_k.min(classes);
    let mut hit1 = 0usize;
    let mut hitk = 0usize;
    let mut per_class_total = vec![0usize; classes];
    let mut per_class_hit = vec![0usize; classes];
    for (row, &label) in logits.iter().zip(labels) {
        if row.len() != classes {
            return Err(HarnessError::Metrics {
                reason: "ragged logits".into(),
            });
        }
        if label >= classes {
            return Err(HarnessError::Metrics {
                reason: format!("label {label} out of range for {classes} classes"),
            });
        }
        let rank = label_rank(row, label);
        per_class_total[label] += 1;
        if rank == 0 {
            hit1 += 1;
            per_class_hit[label] += 1;
        }
        if rank < k {
            hitk += 1;
        }
    }
    let n = labels.len() as f64;
    let per_class_recall: Vec<Option<f64>> = per_class_total
        .iter()
        .zip(&per_class_hit)
        .map(|(&total, &hit)| {
            if total > 0 {
                Some(hit as f64 / total as f64)
            } else {
                None
            }
        })
        .collect();
    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    let macro_recall = present.iter().sum::<f64>() / present.len() as f64;
    let top1 = hit1 as f64 / n;
    Ok(MetricsReport {
        top1,
        top5: hitk as f64 / n,
        micro: top1,
        macro_recall,
        per_class_recall,
        loss_curve: Vec::new(),
        param_count: 0,
        wall_clock_secs: 0.0,
    })
}

/// Numerically stable softmax of one logit row (used by the ensemble).
pub fn softmax_row(row: &[f64]) -> Vec<f64> {
    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - mx).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / sum).collect()
}

/// Deterministic delimited metrics file: one `name,value` row per metric,
/// floats printed with the shortest round-trip representation.
pub fn write_metrics_file(path: &Path, report: &MetricsReport) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?,
    );
    let werr = |e: std::io::Error| HarnessError::io(path, e);
    writeln!(out, "metric,value").map_err(werr)?;
    writeln!(out, "top1,{}", report.top1).map_err(werr)?;
    writeln!(out, "top5,{}", report.top5).map_err(werr)?;
    writeln!(out, "micro,{}", report.micro).map_err(werr)?;
    writeln!(out, "macro_recall,{}", report.macro_recall).map_err(werr)?;
    writeln!(out, "param_count,{}", report.param_count).map_err(werr)?;
    for (c, recall) in report.per_class_recall.iter().enumerate() {
        if let Some(r) = recall {
            writeln!(out, "recall.{c},{r}").map_err(werr)?;
        }
    }
    for (e, loss) in report.loss_curve.iter().enumerate() {
        writeln!(out, "loss.{e},{loss}").map_err(werr)?;
    }
    out.flush().map_err(werr)?;
    Ok(())
}
