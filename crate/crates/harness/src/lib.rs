//! Experiment harness: configuration, dataset assembly, the training loop,
//! evaluation metrics, the fusion-mode ablation matrix, ensembling, gradient
//! verification, and checkpointing.

mod checkpoint;
mod config;
mod data;
mod ensemble;
mod error;
mod gradsuite;
mod matrix;
mod metrics;
mod train;

pub use checkpoint::{load_model, read_checkpoint, save_checkpoint, RawCheckpoint};
pub use config::{
    DatasetConfig, DatasetKind, ExperimentConfig, OptimConfig, Precision, RunMode, NUM_CLASSES,
};
pub use data::{load_dataset, LoadedDataset, LoadedSample};
pub use ensemble::ensemble_predict;
pub use error::{HarnessError, Result};
pub use gradsuite::{run_gradient_suite, CheckOutcome, EPS, TOL};
pub use matrix::{mode_slug, parse_modes, run_matrix, write_table, MatrixCell, MatrixResult};
pub use metrics::{compute_metrics, softmax_row, write_metrics_file, MetricsReport};
pub use train::{eval_logits, evaluate, run_experiment, TOP_K};
