//! Finite-difference checks through the pathway building blocks and the
//! fully composed fused dual-pathway mode on a miniature two-stage config.

use pathways::{joint_loss, FusionMode, Model, PathwayConfig};
use rand::Rng;
use tensor_core::{grad_check_params, seed, ParamStore, Tensor};
use track_model::{build_object_tensor, BBox, Category, Detection, TrackEncoderConfig};

fn micro_pcfg() -> PathwayConfig {
    // Channel widths stay at 3+ so no layer-norm runs over a near-degenerate
    // two-element slice (those have vanishing input gradients).
    PathwayConfig {
        frames_appearance: 2,
        rate_ratio: 2,
        appearance_widths: vec![6],
        beta_div: 2,
        blocks_per_stage: 1,
        temporal_kernel: 3,
        spatial_kernel: 3,
        entry_strides: vec![1],
        mgaf_sites: vec![1],
        attention_width: Some(3),
        num_classes: 3,
        lateral_kernel: 5,
    }
}

fn micro_tcfg() -> TrackEncoderConfig {
    TrackEncoderConfig {
        layers: 2,
        kernel_length: 3,
        channels: vec![3, 3],
        num_classes: 3,
        num_slots: 1,
    }
}

fn video(t: usize, hw: usize, key: &str) -> Tensor<f64> {
    let mut rng = seed::rng(15, key);
    Tensor::from_fn(vec![t, hw, hw, 3], |_| rng.gen_range(0.0..1.0))
}

fn tracks(t: usize, key: &str) -> track_model::ObjectTensor<f64> {
    let mut rng = seed::rng(16, key);
    let dets: Vec<Detection> = (0..t)
        .map(|f| {
            let x: f64 = rng.gen_range(0.0..0.6);
            let y: f64 = rng.gen_range(0.0..0.6);
            Detection::new(
                f,
                Category::Object,
                Some(0),
                BBox::new(x, y, x + 0.3, y + 0.3).unwrap(),
                1.0,
            )
            .unwrap()
        })
        .collect();
    build_object_tensor(&dets, t, 1).unwrap()
}

#[test]
fn residual_block_gradient() {
    let mut store = ParamStore::<f64>::new();
    let mut rng = seed::rng(1, "init");
    let block = pathways::BlockParams::init(&mut store, "b", 3, 3, 3, &mut rng).unwrap();
    let mut rngx = seed::rng(2, "x");
    let x_t = Tensor::from_fn(vec![3, 4, 4, 3], |_| rngx.gen_range(-1.0..1.0));
    let report = grad_check_params(
        |sess| -> pathways::Result<tensor_core::TensorRef> {
            let x = sess.input(&x_t);
            let (out, _) = pathways::block_forward(sess, &block, x, None)?;
            let sq = sess.tape.mul(out, out)?;
            Ok(sess.tape.sum(sq)?)
        },
        &store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.passed(), "block rel err {}", report.max_rel_err);
}

#[test]
fn fused_block_gradient() {
    // A small batch keeps every parameter coordinate's gradient well above
    // the finite-difference noise floor; the loss is scaled to O(1).
    let mut store = ParamStore::<f64>::new();
    let mut rng = seed::rng(3, "init");
    let mut block = pathways::BlockParams::init(&mut store, "b", 3, 3, 3, &mut rng).unwrap();
    let mcfg = mgaf::MgafConfig {
        feature_channels: 3,
        object_channels: 4,
        attention_width: 2,
    };
    block.fusion = Some(mgaf::MgafWeights::init(&mut store, "site", mcfg, &mut rng).unwrap());

    let mut rngx = seed::rng(4, "x");
    let batch = 3;
    let xs: Vec<Tensor<f64>> = (0..batch)
        .map(|_| Tensor::from_fn(vec![3, 3, 3, 3], |_| rngx.gen_range(-1.0..1.0)))
        .collect();
    let us: Vec<Tensor<f64>> = (0..batch)
        .map(|_| Tensor::from_fn(vec![5, 4], |_| rngx.gen_range(-1.0..1.0)))
        .collect();
    let report = grad_check_params(
        |sess| -> pathways::Result<tensor_core::TensorRef> {
            let mut total: Option<tensor_core::TensorRef> = None;
            for (x_t, u_t) in xs.iter().zip(&us) {
                let x = sess.input(x_t);
                let u = sess.input(u_t);
                let (out, _) = pathways::block_forward(sess, &block, x, Some(u))?;
                let n = sess.tape.value(out).numel();
                let sq = sess.tape.mul(out, out)?;
                let s = sess.tape.sum(sq)?;
                let s = sess.tape.scale(s, 1.0 / (n * batch) as f64)?;
                total = Some(match total {
                    Some(t) => sess.tape.add(t, s)?,
                    None => s,
                });
            }
            Ok(total.unwrap())
        },
        &store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.passed(), "fused block rel err {}", report.max_rel_err);
}

#[test]
fn lateral_gradient() {
    let mut store = ParamStore::<f64>::new();
    let mut rng = seed::rng(5, "init");
    let lat = pathways::LateralParams::init(&mut store, "lat", 2, 5, 4, &mut rng).unwrap();
    let mut rngx = seed::rng(6, "x");
    let x_t = Tensor::from_fn(vec![8, 2, 2, 2], |_| rngx.gen_range(-1.0..1.0));
    let report = grad_check_params(
        |sess| -> pathways::Result<tensor_core::TensorRef> {
            let x = sess.input(&x_t);
            let y = pathways::lateral_fuse(sess, &lat, x)?;
            let sq = sess.tape.mul(y, y)?;
            Ok(sess.tape.sum(sq)?)
        },
        &store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.passed(), "lateral rel err {}", report.max_rel_err);
}

#[test]
fn two_stage_appearance_gradient() {
    let pcfg = PathwayConfig {
        appearance_widths: vec![3, 4],
        beta_div: 1,
        entry_strides: vec![1, 2],
        mgaf_sites: vec![],
        ..micro_pcfg()
    };
    let model = Model::<f64>::build(FusionMode::A, pcfg, micro_tcfg(), 7).unwrap();
    let vid = video(4, 4, "app");
    let report = grad_check_params(
        |sess| -> pathways::Result<tensor_core::TensorRef> {
            let out = model.forward(sess, Some(&vid), None, 0)?;
            joint_loss(sess, &out, 1, 1.0, 1.0)
        },
        &model.store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(
        report.passed(),
        "appearance rel err {} over {} coords",
        report.max_rel_err,
        report.coords_checked
    );
}

#[test]
fn composed_fused_dual_pathway_gradient() {
    // The flagship mode end to end: both pathways, a lateral, the track
    // encoder, one fusion site, and both heads.
    let mut model = Model::<f64>::build(FusionMode::APlusMgafMO, micro_pcfg(), micro_tcfg(), 8)
        .unwrap();
    // Move the attention projections off their init-time plateau (scaled dot
    // products start near-uniform, leaving score gradients second-order
    // small and below the finite-difference noise floor).
    let boosts: Vec<(tensor_core::ParamId, Vec<f64>)> = model
        .store
        .iter()
        .filter(|(_, name, _)| {
            name.starts_with("mgaf.") && (name.ends_with(".w_z") || name.ends_with(".w_u"))
        })
        .map(|(id, _, t)| (id, t.data().iter().map(|v| v * 4.0).collect()))
        .collect();
    for (id, vals) in boosts {
        model.store.set_values(id, vals).unwrap();
    }
    let model = model;
    let samples: Vec<(Tensor<f64>, track_model::ObjectTensor<f64>, usize)> = (0..3)
        .map(|i| {
            (
                video(4, 4, &format!("comp{i}")),
                tracks(4, &format!("comp{i}")),
                i % 3,
            )
        })
        .collect();
    let report = grad_check_params(
        |sess| -> pathways::Result<tensor_core::TensorRef> {
            let mut total: Option<tensor_core::TensorRef> = None;
            for (vid, tr, label) in &samples {
                let out = model.forward(sess, Some(vid), Some(tr), 0)?;
                let loss = joint_loss(sess, &out, *label, 1.0, 0.5)?;
                let loss = sess.tape.scale(loss, 1.0 / samples.len() as f64)?;
                total = Some(match total {
                    Some(t) => sess.tape.add(t, loss)?,
                    None => loss,
                });
            }
            Ok(total.unwrap())
        },
        &model.store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(
        report.passed(),
        "composed rel err {} over {} coords",
        report.max_rel_err,
        report.coords_checked
    );
}
