//! Fusion-site contracts: uniform attention, single-key broadcast, the 0.5
//! gate at zero projection, shape preservation, gate bounds, spatial
//! equivariance, and full finite-difference checks over all site weights.

use mgaf::{attend, mgaf_forward, mgaf_forward_diag, spatial_collapse, MgafConfig, MgafWeights};
use rand::Rng;
use tensor_core::{grad_check_params, seed, ParamStore, Session, Tape, Tensor};

fn rand_tensor(shape: Vec<usize>, key: &str) -> Tensor<f64> {
    let mut rng = seed::rng(99, key);
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn setup(cfg: MgafConfig, key: &str) -> (ParamStore<f64>, MgafWeights) {
    let mut store = ParamStore::new();
    let mut rng = seed::rng(7, key);
    let w = MgafWeights::init(&mut store, "site", cfg, &mut rng).unwrap();
    (store, w)
}

fn zero_param(store: &mut ParamStore<f64>, id: tensor_core::ParamId) {
    let n = store.get(id).numel();
    store.set_values(id, vec![0.0; n]).unwrap();
}

#[test]
fn spatial_collapse_examples() {
    let store = ParamStore::<f64>::new();
    let mut sess = Session::new(&store, Tape::verify());
    let f = sess.input(&Tensor::new(vec![1, 2, 2, 1], vec![1.0, 3.0, 5.0, 7.0]).unwrap());
    let z = spatial_collapse(&mut sess, f).unwrap();
    assert_eq!(sess.tape.value(z).data(), &[4.0]);

    let c = sess.input(&Tensor::full(vec![3, 4, 5, 2], 0.7));
    let z = spatial_collapse(&mut sess, c).unwrap();
    assert_eq!(sess.tape.value(z).shape(), &[3, 2]);
    for &v in sess.tape.value(z).data() {
        assert!((v - 0.7).abs() < 1e-15);
    }
}

#[test]
fn zero_query_projection_gives_uniform_attention() {
    // W_z = 0 makes every attention row uniform, so each row of A equals the
    // column-mean of U W_U.
    let cfg = MgafConfig {
        feature_channels: 3,
        object_channels: 4,
        attention_width: 5,
    };
    let (mut store, w) = setup(cfg, "uniform");
    zero_param(&mut store, w.w_z);

    let mut sess = Session::new(&store, Tape::verify());
    let z = sess.input(&rand_tensor(vec![4, 3], "z"));
    let u_t = rand_tensor(vec![6, 4], "u");
    let u = sess.input(&u_t);
    let a = attend(&mut sess, z, u, &w).unwrap();

    // Column-mean of U W_U, computed independently.
    let ukeys = {
        let uref = sess.input(&u_t);
        let wu = sess.param(w.w_u);
        sess.tape.matmul(uref, wu).unwrap()
    };
    let kd = sess.tape.value(ukeys).data().to_vec();
    let mut colmean = vec![0.0; 5];
    for row in kd.chunks_exact(5) {
        for (m, &v) in colmean.iter_mut().zip(row) {
            *m += v / 6.0;
        }
    }
    for row in sess.tape.value(a).data().chunks_exact(5) {
        for (got, want) in row.iter().zip(&colmean) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn single_key_broadcasts_independent_of_queries() {
    let cfg = MgafConfig {
        feature_channels: 3,
        object_channels: 4,
        attention_width: 2,
    };
    let (store, w) = setup(cfg, "singlekey");
    let u_t = rand_tensor(vec![1, 4], "u1");

    let run = |zt: &Tensor<f64>| -> Vec<f64> {
        let mut sess = Session::new(&store, Tape::verify());
        let z = sess.input(zt);
        let u = sess.input(&u_t);
        let a = attend(&mut sess, z, u, &w).unwrap();
        sess.tape.value(a).data().to_vec()
    };
    let a1 = run(&rand_tensor(vec![4, 3], "za"));
    let a2 = run(&rand_tensor(vec![4, 3], "zb"));
    assert_eq!(a1, a2, "single key must make A independent of z");
    // Every query row equals U W_U.
    for pair in a1.chunks_exact(2).collect::<Vec<_>>().windows(2) {
        assert_eq!(pair[0], pair[1]);
    }
}

/// Attention row sums observed through the module: append a constant-one
/// channel to U and route it through W_U so one output column carries the
/// row sum of the softmax weights.
fn attention_row_sums(u_shift: f64) -> Vec<f64> {
    let cfg = MgafConfig {
        feature_channels: 3,
        object_channels: 4,
        attention_width: 2,
    };
    let (mut store, w) = setup(cfg, "rowsum");
    // W_U column 0 reads only the constant channel 3 of U.
    store
        .set_values(w.w_u, vec![0.0, 0.3, 0.0, -0.4, 0.0, 0.9, 1.0, 0.0])
        .unwrap();

    let mut rng = seed::rng(31, "rowsum_u");
    let u = Tensor::from_fn(vec![6, 4], |i| {
        if i % 4 == 3 {
            1.0
        } else {
            rng.gen_range(-1.0..1.0) + u_shift
        }
    });
    let mut sess = Session::new(&store, Tape::verify());
    let zr = sess.input(&rand_tensor(vec![4, 3], "rowsum_z"));
    let ur = sess.input(&u);
    let a = attend(&mut sess, zr, ur, &w).unwrap();
    sess.tape
        .value(a)
        .data()
        .chunks_exact(2)
        .map(|row| row[0])
        .collect()
}

#[test]
fn attention_rows_sum_to_one_even_under_input_shift() {
    for shift in [0.0, 5.0, -3.0, 100.0] {
        for s in attention_row_sums(shift) {
            assert!((s - 1.0).abs() < 1e-6, "row sum {s} at shift {shift}");
        }
    }
}

#[test]
fn zero_gate_projection_halves_the_feature() {
    let cfg = MgafConfig {
        feature_channels: 4,
        object_channels: 3,
        attention_width: 3,
    };
    let (mut store, w) = setup(cfg, "halfgate");
    zero_param(&mut store, w.w_uz);

    let f_t = rand_tensor(vec![3, 2, 2, 4], "f");
    let u_t = rand_tensor(vec![3, 3], "u");
    let mut sess = Session::new(&store, Tape::verify());
    let f = sess.input(&f_t);
    let u = sess.input(&u_t);
    let (out, diag) = mgaf_forward_diag(&mut sess, f, u, &w).unwrap();
    for (o, x) in sess.tape.value(out).data().iter().zip(f_t.data()) {
        assert_eq!(*o, 0.5 * x, "gate must be exactly 0.5");
    }
    assert!((diag.gate_mean - 0.5).abs() < 1e-12);
}

#[test]
fn zero_feature_gives_zero_output() {
    let cfg = MgafConfig {
        feature_channels: 4,
        object_channels: 3,
        attention_width: 4,
    };
    let (store, w) = setup(cfg, "zf");
    let mut sess = Session::new(&store, Tape::verify());
    let f = sess.input(&Tensor::zeros(vec![2, 3, 3, 4]));
    let u = sess.input(&rand_tensor(vec![5, 3], "u"));
    let out = mgaf_forward(&mut sess, f, u, &w).unwrap();
    assert!(sess.tape.value(out).data().iter().all(|&v| v == 0.0));
}

#[test]
fn shape_preserved_and_gate_bounded() {
    let cfg = MgafConfig {
        feature_channels: 6,
        object_channels: 5,
        attention_width: 8,
    };
    let (store, w) = setup(cfg, "bounds");
    let f_t = rand_tensor(vec![4, 3, 3, 6], "f");
    let u_t = rand_tensor(vec![7, 5], "u"); // T_U != T exercises interpolation
    let mut sess = Session::new(&store, Tape::verify());
    let f = sess.input(&f_t);
    let u = sess.input(&u_t);
    let out = mgaf_forward(&mut sess, f, u, &w).unwrap();
    assert_eq!(sess.tape.value(out).shape(), f_t.shape());
    // Gate in (0,1) means |out| <= |f| elementwise and signs preserved.
    for (o, x) in sess.tape.value(out).data().iter().zip(f_t.data()) {
        assert!(o.abs() <= x.abs() + 1e-15);
        if *x != 0.0 {
            assert!(o.signum() == x.signum() || *o == 0.0);
            assert!(o.abs() > 0.0, "gate must stay strictly positive");
        }
    }
}

#[test]
fn gate_spatially_equivariant() {
    // The gate sees f only through its spatial mean, so permuting pixels
    // within each frame permutes the output identically.
    let cfg = MgafConfig {
        feature_channels: 3,
        object_channels: 4,
        attention_width: 3,
    };
    let (store, w) = setup(cfg, "equiv");
    let t = 2;
    let (h, wd, c) = (2, 3, 3);
    let f_t = rand_tensor(vec![t, h, wd, c], "f");
    let perm: Vec<usize> = vec![3, 0, 5, 1, 4, 2]; // permutation of the 6 pixels

    let mut permuted = vec![0.0; f_t.numel()];
    for ti in 0..t {
        for (dst, &src) in perm.iter().enumerate() {
            for ch in 0..c {
                permuted[(ti * h * wd + dst) * c + ch] =
                    f_t.data()[(ti * h * wd + src) * c + ch];
            }
        }
    }
    let f_p = Tensor::new(vec![t, h, wd, c], permuted).unwrap();
    let u_t = rand_tensor(vec![4, 4], "u");

    let run = |ft: &Tensor<f64>| -> Vec<f64> {
        let mut sess = Session::new(&store, Tape::verify());
        let f = sess.input(ft);
        let u = sess.input(&u_t);
        let out = mgaf_forward(&mut sess, f, u, &w).unwrap();
        sess.tape.value(out).data().to_vec()
    };
    let base = run(&f_t);
    let perm_out = run(&f_p);
    for ti in 0..t {
        for (dst, &src) in perm.iter().enumerate() {
            for ch in 0..c {
                let a = base[(ti * h * wd + src) * c + ch];
                let b = perm_out[(ti * h * wd + dst) * c + ch];
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn full_gradient_check_over_all_site_weights() {
    let cfg = MgafConfig {
        feature_channels: 6,
        object_channels: 5,
        attention_width: 8,
    };
    let (store, w) = setup(cfg, "grad");
    let f_t = rand_tensor(vec![4, 3, 3, 6], "f");
    let u_t = rand_tensor(vec![6, 5], "u");
    let report = grad_check_params(
        |sess| {
            let f = sess.input(&f_t);
            let u = sess.input(&u_t);
            let out = mgaf_forward(sess, f, u, &w)?;
            let sq = sess.tape.mul(out, out)?;
            sess.tape.sum(sq)
        },
        &store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(
        report.passed(),
        "mgaf gradient check failed: {} (coords {})",
        report.max_rel_err,
        report.coords_checked
    );
}

#[test]
fn parameter_count_matches_enumeration() {
    let cfg = MgafConfig {
        feature_channels: 6,
        object_channels: 5,
        attention_width: 8,
    };
    let (store, _w) = setup(cfg, "count");
    assert_eq!(store.total_parameters(), cfg.parameter_count());
}

#[test]
fn width_mismatch_is_rejected() {
    let cfg = MgafConfig {
        feature_channels: 6,
        object_channels: 5,
        attention_width: 4,
    };
    let (store, w) = setup(cfg, "mismatch");
    let mut sess = Session::new(&store, Tape::verify());
    let f = sess.input(&Tensor::zeros(vec![2, 2, 2, 3])); // wrong C_M
    let u = sess.input(&Tensor::zeros(vec![2, 5]));
    assert!(mgaf_forward(&mut sess, f, u, &w).is_err());
}
