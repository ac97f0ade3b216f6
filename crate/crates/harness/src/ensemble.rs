use crate::checkpoint::load_model;
use crate::config::ExperimentConfig;
use crate::data::{load_dataset, LoadedDataset};
use crate::error::{HarnessError, Result};
use crate::metrics::{compute_metrics, softmax_row, MetricsReport};
use crate::train::{eval_logits, TOP_K};
use pathways::Model;
use std::path::Path;

/// Averages the member models' softmax probabilities over the configured
/// eval split, then scores the averaged prediction. Members must agree on
/// the class count; evaluation always runs in double precision.
pub fn ensemble_predict(checkpoints: &[&Path], data_cfg: &ExperimentConfig) -> Result<MetricsReport> {
    if checkpoints.is_empty() {
        return Err(HarnessError::EnsembleMembers);
    }
    let mut members: Vec<(ExperimentConfig, Model<f64>)> = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        members.push(load_model::<f64>(path)?);
    }
    let classes = members[0].1.pathway_cfg.num_classes;
    for (_, m) in &members {
        if m.pathway_cfg.num_classes != classes {
            return Err(HarnessError::EnsembleClasses {
                a: classes,
                b: m.pathway_cfg.num_classes,
            });
        }
    }

    // The dataset comes from the caller's config (not the members'): all
    // members see identical samples.
    let data: LoadedDataset<f64> = load_dataset(data_cfg)?;
    let n = data.eval.len();
    let mut averaged = vec![vec![0.0f64; classes]; n];
    for (_, model) in &members {
        let logits = eval_logits(model, &data.eval)?;
        for (avg, row) in averaged.iter_mut().zip(&logits) {
            let probs = softmax_row(row);
            for (a, p) in avg.iter_mut().zip(probs) {
                *a += p / members.len() as f64;
            }
        }
    }
    let labels: Vec<usize> = data.eval.iter().map(|s| s.label).collect();
    let mut report = compute_metrics(&averaged, &labels, TOP_K)?;
    report.param_count = members
        .iter()
        .map(|(_, m)| m.store.total_parameters())
        .sum();
    Ok(report)
}
