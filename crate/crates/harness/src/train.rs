use crate::checkpoint::save_checkpoint;
use crate::config::{ExperimentConfig, Precision, RunMode};
use crate::data::{load_dataset, LoadedDataset, LoadedSample};
use crate::error::{HarnessError, Result};
use crate::metrics::{compute_metrics, write_metrics_file, MetricsReport};
use pathways::{count_parameters, joint_loss, max_offset, Model};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;
use tensor_core::{seed, GradBuffer, Real, Session, Sgd, Tape};

pub const TOP_K: usize = 5;

/// Trains the configured mode on the train split, evaluates on the
/// configured eval split, and (when an output directory is set) writes the
/// resolved config, the metrics file, and a checkpoint. Fully deterministic
/// for a fixed config: parallel batch gradients merge in sample order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F64 => run_typed::<f64>(cfg),
        Precision::F32 => run_typed::<f32>(cfg),
    }
}

fn run_typed<F: Real>(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let RunMode::Fusion(mode) = cfg.mode else {
        return Err(HarnessError::Config {
            reason: "run_experiment needs a fusion mode; use the ensemble entry point".into(),
        });
    };
    let started = Instant::now();
    let data: LoadedDataset<F> = load_dataset(cfg)?;
    let mut model = Model::<F>::build(mode, cfg.pathway.clone(), cfg.track.clone(), cfg.seed)?;
    let mut sgd: Sgd<F> = Sgd::new(cfg.optim.lr, cfg.optim.momentum, cfg.optim.weight_decay);

    let mut loss_curve = Vec::with_capacity(cfg.optim.epochs);
    for epoch in 0..cfg.optim.epochs {
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        let mut shuffle_rng = seed::rng_indexed(cfg.seed, "shuffle", epoch as u64);
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.optim.batch_size) {
            // Per-sample temporal jitter offsets, drawn up front so the
            // parallel evaluation cannot perturb the stream.
            let jobs: Vec<(usize, usize)> = batch
                .iter()
                .map(|&i| {
                    let t = data.train[i]
                        .video
                        .as_ref()
                        .map(|v| v.shape()[0])
                        .unwrap_or(cfg.dataset.frames);
                    let span = max_offset(t, &cfg.pathway);
                    let mut rng =
                        seed::rng_indexed(cfg.seed, "jitter", (epoch * data.train.len() + i) as u64);
                    let offset = if span == 0 { 0 } else { rng.gen_range(0..=span) };
                    (i, offset)
                })
                .collect();

            let results: Vec<(GradBuffer<F>, f64)> = jobs
                .par_iter()
                .map(|&(i, offset)| -> Result<(GradBuffer<F>, f64)> {
                    let sample = &data.train[i];
                    let mut sess = Session::new(&model.store, Tape::verify());
                    let out =
                        model.forward(&mut sess, sample.video.as_ref(), Some(&sample.tracks), offset)?;
                    let loss = joint_loss(&mut sess, &out, sample.label, cfg.lambda_rgb, cfg.lambda_obj)?;
                    let loss_val = sess.tape.value(loss).item().to_double();
                    sess.backward(loss)?;
                    let mut grads = GradBuffer::zeros_like(&model.store);
                    sess.accumulate_grads(&mut grads);
                    Ok((grads, loss_val))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut total = GradBuffer::zeros_like(&model.store);
            for (g, l) in &results {
                total.add_from(g);
                epoch_loss += l;
            }
            total.scale(F::from_f64(1.0 / results.len() as f64));
            sgd.step(&mut model.store, &total)?;
        }
        loss_curve.push(epoch_loss / data.train.len() as f64);

        if cfg.optim.eval_every > 0
            && cfg.optim.target_top1 > 0.0
            && (epoch + 1) % cfg.optim.eval_every == 0
        {
            let report = evaluate(&model, &data.eval)?;
            if report.top1 >= cfg.optim.target_top1 {
                break;
            }
        }
    }

    let mut report = evaluate(&model, &data.eval)?;
    report.loss_curve = loss_curve;
    report.param_count = count_parameters(&cfg.pathway, &cfg.track, mode);
    debug_assert_eq!(report.param_count, model.store.total_parameters());
    report.wall_clock_secs = started.elapsed().as_secs_f64();

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        std::fs::write(dir.join("resolved.config"), cfg.to_text())
            .map_err(|e| HarnessError::io(dir, e))?;
        write_metrics_file(&dir.join("metrics.csv"), &report)?;
        save_checkpoint(&dir.join("model.ckpt"), cfg, &model)?;
    }
    Ok(report)
}

/// Eval logits for one model over a sample list (deterministic, offset 0).
pub fn eval_logits<F: Real>(
    model: &Model<F>,
    samples: &[LoadedSample<F>],
) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|sample| -> Result<Vec<f64>> {
            let mut sess = Session::new(&model.store, Tape::verify());
            let out = model.forward(&mut sess, sample.video.as_ref(), Some(&sample.tracks), 0)?;
            Ok(sess
                .tape
                .value(out.eval_logits())
                .data()
                .iter()
                .map(|v| v.to_double())
                .collect())
        })
        .collect()
}

pub fn evaluate<F: Real>(model: &Model<F>, samples: &[LoadedSample<F>]) -> Result<MetricsReport> {
    let logits = eval_logits(model, samples)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    compute_metrics(&logits, &labels, TOP_K)
}
