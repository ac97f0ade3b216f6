//! The gradient verification suite behind the `gradcheck` subcommand and the
//! acceptance gate: central finite differences over every differentiable op
//! and module, in double precision, eps = 1e-5, tolerance 1e-4.

use crate::error::Result;
use pathways::{joint_loss, FusionMode, Model, PathwayConfig};
use rand::Rng;
use tensor_core::{
    grad_check, grad_check_params, seed, GradCheckReport, ParamStore, Tensor, TensorRef,
};
use track_model::{TrackEncoder, TrackEncoderConfig};

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-4;

pub struct CheckOutcome {
    pub name: &'static str,
    pub report: GradCheckReport,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn rt(shape: Vec<usize>, key: &str) -> Tensor<f64> {
    let mut rng = seed::rng(2024, key);
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn rt_pos(shape: Vec<usize>, key: &str) -> Tensor<f64> {
    let mut rng = seed::rng(2024, key);
    Tensor::from_fn(shape, |_| rng.gen_range(0.1..1.0))
}

type OpCheck = fn() -> tensor_core::Result<GradCheckReport>;

fn op_checks() -> Vec<(&'static str, OpCheck)> {
    vec![
        ("matmul", || {
            grad_check(
                |t, r| {
                    let c = t.matmul(r[0], r[1])?;
                    let s = t.sigmoid(c)?;
                    t.sum(s)
                },
                &[rt(vec![3, 4], "mm_a"), rt(vec![4, 2], "mm_b")],
                EPS,
                TOL,
            )
        }),
        ("matmul_bt", || {
            grad_check(
                |t, r| {
                    let c = t.matmul_bt(r[0], r[1])?;
                    let s = t.sigmoid(c)?;
                    t.sum(s)
                },
                &[rt(vec![3, 5], "bt_a"), rt(vec![4, 5], "bt_b")],
                EPS,
                TOL,
            )
        }),
        ("softmax", || {
            grad_check(
                |t, r| {
                    let y = t.softmax(r[0], 1)?;
                    let w = t.mul(y, r[1])?;
                    t.sum(w)
                },
                &[rt(vec![3, 5], "sm_x"), rt(vec![3, 5], "sm_w")],
                EPS,
                TOL,
            )
        }),
        ("conv_temporal", || {
            grad_check(
                |t, r| {
                    let y = t.conv_temporal(r[0], r[1], r[2])?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![7, 2], "ct_x"),
                    rt(vec![9, 2, 3], "ct_w"),
                    rt(vec![3], "ct_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("conv_temporal_folded", || {
            grad_check(
                |t, r| {
                    let y = t.conv_temporal(r[0], r[1], r[2])?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![5, 2, 2, 2], "ctf_x"),
                    rt(vec![3, 2, 2], "ctf_w"),
                    rt(vec![2], "ctf_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("conv_temporal_strided", || {
            grad_check(
                |t, r| {
                    let y = t.conv_temporal_strided(r[0], r[1], r[2], 4)?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![8, 2], "cts_x"),
                    rt(vec![5, 2, 4], "cts_w"),
                    rt(vec![4], "cts_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("conv_spatial", || {
            grad_check(
                |t, r| {
                    let y = t.conv_spatial(r[0], r[1], r[2], 1)?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![2, 4, 4, 2], "cs_x"),
                    rt(vec![3, 3, 2, 3], "cs_w"),
                    rt(vec![3], "cs_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("conv_spatial_strided", || {
            grad_check(
                |t, r| {
                    let y = t.conv_spatial(r[0], r[1], r[2], 2)?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![2, 5, 5, 2], "css_x"),
                    rt(vec![3, 3, 2, 2], "css_w"),
                    rt(vec![2], "css_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("relu", || {
            // Inputs kept away from the kink at zero.
            grad_check(
                |t, r| {
                    let y = t.relu(r[0])?;
                    let s = t.mul(y, y)?;
                    t.sum(s)
                },
                &[rt_pos(vec![6], "relu_x")],
                EPS,
                TOL,
            )
        }),
        ("sigmoid", || {
            grad_check(
                |t, r| {
                    let y = t.sigmoid(r[0])?;
                    let s = t.mul(y, y)?;
                    t.sum(s)
                },
                &[rt(vec![6], "sig_x")],
                EPS,
                TOL,
            )
        }),
        ("layer_norm", || {
            grad_check(
                |t, r| {
                    let y = t.layer_norm(r[0], 1, r[1], r[2], 1e-5)?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[
                    rt(vec![4, 6], "ln_x"),
                    rt(vec![6], "ln_g"),
                    rt(vec![6], "ln_b"),
                ],
                EPS,
                TOL,
            )
        }),
        ("pool_spatial_avg", || {
            grad_check(
                |t, r| {
                    let y = t.spatial_avg(r[0])?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[rt(vec![2, 3, 3, 2], "pool_x")],
                EPS,
                TOL,
            )
        }),
        ("pool_global_avg", || {
            grad_check(
                |t, r| {
                    let y = t.global_avg(r[0])?;
                    let s = t.sigmoid(y)?;
                    t.sum(s)
                },
                &[rt(vec![2, 3, 3, 2], "gpool_x")],
                EPS,
                TOL,
            )
        }),
        ("cross_entropy", || {
            grad_check(
                |t, r| t.cross_entropy(r[0], &[1, 4, 0]),
                &[rt(vec![3, 5], "ce_x")],
                EPS,
                TOL,
            )
        }),
        ("gate_mul", || {
            grad_check(
                |t, r| {
                    let y = t.gate_mul(r[0], r[1])?;
                    let s = t.mul(y, y)?;
                    t.sum(s)
                },
                &[rt(vec![3, 2, 2, 4], "gm_f"), rt(vec![3, 4], "gm_g")],
                EPS,
                TOL,
            )
        }),
        ("time_interp", || {
            grad_check(
                |t, r| {
                    let y = t.time_interp(r[0], 8)?;
                    let s = t.mul(y, y)?;
                    t.sum(s)
                },
                &[rt(vec![5, 3], "ti_x")],
                EPS,
                TOL,
            )
        }),
        ("elementwise_chain", || {
            // add, mul, scale, add_bias, concat, reshape in one pass.
            grad_check(
                |t, r| {
                    let a = t.add(r[0], r[1])?;
                    let m = t.mul(a, r[0])?;
                    let sc = t.scale(m, 0.7)?;
                    let cat = t.concat_channels(&[sc, r[1]])?;
                    let wb = t.add_bias(cat, r[2])?;
                    let rs = t.reshape(wb, vec![12])?;
                    let s = t.sigmoid(rs)?;
                    t.sum(s)
                },
                &[
                    rt(vec![2, 3], "ew_a"),
                    rt(vec![2, 3], "ew_b"),
                    rt(vec![6], "ew_bias"),
                ],
                EPS,
                TOL,
            )
        }),
    ]
}

fn micro_pathway_cfg() -> PathwayConfig {
    // All layer-norm slices stay at width >= 3 (a two-element slice
    // normalizes to +/-1 with vanishing gradients).
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

fn micro_track_cfg() -> TrackEncoderConfig {
    TrackEncoderConfig {
        layers: 2,
        kernel_length: 3,
        channels: vec![3, 3],
        num_classes: 3,
        num_slots: 1,
    }
}

fn micro_tracks(t: usize, key: &str) -> track_model::ObjectTensor<f64> {
    let mut rng = seed::rng(91, key);
    track_model::ObjectTensor {
        values: Tensor::from_fn(vec![t, 4], |_| rng.gen_range(0.0..1.0)),
        slots: vec![None],
    }
}

fn boost_attention(model: &mut Model<f64>) {
    // Scaled dot products start near-uniform; step the projections off that
    // plateau so score gradients clear the finite-difference noise floor.
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
}

fn module_checks() -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    // Track encoder end to end.
    {
        let cfg = TrackEncoderConfig {
            layers: 5,
            kernel_length: 9,
            channels: vec![4, 4, 4, 4, 4],
            num_classes: 3,
            num_slots: 2,
        };
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(31, "init");
        let enc = TrackEncoder::init(&mut store, "obj", &cfg, &mut rng).unwrap();
        let z = {
            let mut drng = seed::rng(32, "z");
            track_model::ObjectTensor {
                values: Tensor::from_fn(vec![12, 8], |_| drng.gen_range(0.0..1.0)),
                slots: vec![None; 2],
            }
        };
        let report = grad_check_params(
            |sess| {
                let feats = enc.forward(sess, &z)?;
                sess.tape.cross_entropy(feats.logits, &[1])
            },
            &store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "track_encoder",
            report,
        });
    }

    // One fusion site over all five weight tensors plus the gate bias.
    {
        let mcfg = mgaf::MgafConfig {
            feature_channels: 6,
            object_channels: 5,
            attention_width: 8,
        };
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(33, "init");
        let w = mgaf::MgafWeights::init(&mut store, "site", mcfg, &mut rng).unwrap();
        let f_t = rt(vec![4, 3, 3, 6], "mgaf_f");
        let u_t = rt(vec![6, 5], "mgaf_u");
        let report = grad_check_params(
            |sess| {
                let f = sess.input(&f_t);
                let u = sess.input(&u_t);
                let out = mgaf::mgaf_forward(sess, f, u, &w)?;
                let sq = sess.tape.mul(out, out)?;
                sess.tape.sum(sq)
            },
            &store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "mgaf_site",
            report,
        });
    }

    // Plain and fused residual blocks (batched probes keep every coordinate
    // above the noise floor).
    {
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(34, "init");
        let block = pathways::BlockParams::init(&mut store, "b", 3, 3, 3, &mut rng).unwrap();
        let xs: Vec<Tensor<f64>> = (0..3).map(|i| rt(vec![3, 4, 4, 3], &format!("blk_x{i}"))).collect();
        let report = grad_check_params(
            |sess| -> pathways::Result<TensorRef> {
                let mut total: Option<TensorRef> = None;
                for x_t in &xs {
                    let x = sess.input(x_t);
                    let (y, _) = pathways::block_forward(sess, &block, x, None)?;
                    let sq = sess.tape.mul(y, y)?;
                    let s = sess.tape.sum(sq)?;
                    let s = sess.tape.scale(s, 1.0 / (sess.tape.value(y).numel() * 3) as f64)?;
                    total = Some(match total {
                        Some(t) => sess.tape.add(t, s)?,
                        None => s,
                    });
                }
                Ok(total.unwrap())
            },
            &store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "motion_block",
            report,
        });
    }
    {
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(35, "init");
        let mut block = pathways::BlockParams::init(&mut store, "b", 3, 3, 3, &mut rng).unwrap();
        let mcfg = mgaf::MgafConfig {
            feature_channels: 3,
            object_channels: 4,
            attention_width: 3,
        };
        block.fusion =
            Some(mgaf::MgafWeights::init(&mut store, "site", mcfg, &mut rng).unwrap());
        let xs: Vec<Tensor<f64>> = (0..3).map(|i| rt(vec![3, 3, 3, 3], &format!("fblk_x{i}"))).collect();
        let us: Vec<Tensor<f64>> = (0..3).map(|i| rt(vec![5, 4], &format!("fblk_u{i}"))).collect();
        let report = grad_check_params(
            |sess| -> pathways::Result<TensorRef> {
                let mut total: Option<TensorRef> = None;
                for (x_t, u_t) in xs.iter().zip(&us) {
                    let x = sess.input(x_t);
                    let u = sess.input(u_t);
                    let (y, _) = pathways::block_forward(sess, &block, x, Some(u))?;
                    let sq = sess.tape.mul(y, y)?;
                    let s = sess.tape.sum(sq)?;
                    let s = sess.tape.scale(s, 1.0 / (sess.tape.value(y).numel() * 3) as f64)?;
                    total = Some(match total {
                        Some(t) => sess.tape.add(t, s)?,
                        None => s,
                    });
                }
                Ok(total.unwrap())
            },
            &store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "motion_block_fused",
            report,
        });
    }

    // Lateral conv-fusion.
    {
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(36, "init");
        let lat = pathways::LateralParams::init(&mut store, "lat", 3, 5, 4, &mut rng).unwrap();
        let x_t = rt(vec![8, 2, 2, 3], "lat_x");
        let report = grad_check_params(
            |sess| {
                let x = sess.input(&x_t);
                let y = pathways::lateral_fuse(sess, &lat, x)?;
                let sq = sess.tape.mul(y, y)?;
                sess.tape.sum(sq)
            },
            &store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "lateral_fuse",
            report,
        });
    }

    // Two-stage appearance pathway.
    {
        let pcfg = PathwayConfig {
            appearance_widths: vec![3, 4],
            beta_div: 1,
            entry_strides: vec![1, 2],
            mgaf_sites: vec![],
            ..micro_pathway_cfg()
        };
        let model = Model::<f64>::build(FusionMode::A, pcfg, micro_track_cfg(), 37).unwrap();
        let vid = rt_pos(vec![4, 4, 4, 3], "app_vid");
        let report = grad_check_params(
            |sess| -> pathways::Result<TensorRef> {
                let out = model.forward(sess, Some(&vid), None, 0)?;
                joint_loss(sess, &out, 1, 1.0, 1.0)
            },
            &model.store,
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "appearance_two_stage",
            report,
        });
    }

    // The fully composed flagship mode.
    {
        let mut model =
            Model::<f64>::build(FusionMode::APlusMgafMO, micro_pathway_cfg(), micro_track_cfg(), 38)
                .unwrap();
        boost_attention(&mut model);
        let samples: Vec<(Tensor<f64>, track_model::ObjectTensor<f64>, usize)> = (0..3)
            .map(|i| {
                (
                    rt_pos(vec![4, 4, 4, 3], &format!("comp_v{i}")),
                    micro_tracks(4, &format!("comp_t{i}")),
                    i % 3,
                )
            })
            .collect();
        let report = grad_check_params(
            |sess| -> pathways::Result<TensorRef> {
                let mut total: Option<TensorRef> = None;
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
            EPS,
            TOL,
        )
        .unwrap();
        out.push(CheckOutcome {
            name: "composed_a_plus_mgaf_m_o",
            report,
        });
    }

    out
}

/// Runs the whole verification suite; the caller decides how to render it.
pub fn run_gradient_suite() -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    for (name, check) in op_checks() {
        let report = check()?;
        outcomes.push(CheckOutcome { name, report });
    }
    outcomes.extend(module_checks());
    Ok(outcomes)
}
