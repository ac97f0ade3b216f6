use proptest::prelude::*;
use rand::Rng;
use tensor_core::{grad_check_params, seed, ParamStore, Session, Tape, Tensor};
use track_model::{build_object_tensor, count_parameters, TrackEncoder, TrackEncoderConfig};

fn tiny_cfg() -> TrackEncoderConfig {
    TrackEncoderConfig {
        layers: 5,
        kernel_length: 9,
        channels: vec![4, 4, 4, 4, 4],
        num_classes: 3,
        num_slots: 2,
    }
}

#[test]
fn closed_form_parameter_count() {
    let cfg = TrackEncoderConfig {
        layers: 1,
        kernel_length: 9,
        channels: vec![4],
        num_classes: 2,
        num_slots: 2, // C_0 = 8
    };
    assert_eq!(count_parameters(&cfg), 302);
}

#[test]
fn count_matches_brute_force_enumeration() {
    for cfg in [tiny_cfg(), TrackEncoderConfig::desk_default(6)] {
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(1, "init");
        TrackEncoder::init(&mut store, "obj", &cfg, &mut rng).unwrap();
        assert_eq!(store.total_parameters(), count_parameters(&cfg));
    }
}

#[test]
fn zero_weights_give_zero_features_and_logits() {
    let cfg = tiny_cfg();
    let mut store = ParamStore::<f64>::new();
    let mut rng = seed::rng(1, "init");
    let enc = TrackEncoder::init(&mut store, "obj", &cfg, &mut rng).unwrap();
    // Zero every parameter.
    let ids: Vec<_> = store.iter().map(|(id, _, _)| id).collect();
    for id in ids {
        let n = store.get(id).numel();
        store.set_values(id, vec![0.0; n]).unwrap();
    }

    let z = build_object_tensor::<f64>(&[], 12, cfg.num_slots).unwrap();
    let mut sess = Session::new(&store, Tape::verify());
    let feats = enc.forward(&mut sess, &z).unwrap();
    for layer in &feats.layers {
        assert!(sess.tape.value(*layer).data().iter().all(|&v| v == 0.0));
    }
    assert!(sess
        .tape
        .value(feats.logits)
        .data()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn full_encoder_gradient_matches_finite_differences() {
    let cfg = tiny_cfg();
    let mut store = ParamStore::<f64>::new();
    let mut rng = seed::rng(3, "init");
    let enc = TrackEncoder::init(&mut store, "obj", &cfg, &mut rng).unwrap();

    let mut drng = seed::rng(5, "tracks");
    let t = 12;
    let z_vals = Tensor::from_fn(vec![t, cfg.input_width()], |_| drng.gen_range(0.0..1.0));
    let z = track_model::ObjectTensor {
        values: z_vals,
        slots: vec![None; cfg.num_slots],
    };

    let report = grad_check_params(
        |sess| {
            let feats = enc.forward(sess, &z)?;
            sess.tape.cross_entropy(feats.logits, &[1])
        },
        &store,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(
        report.passed(),
        "encoder FD check failed: {}",
        report.max_rel_err
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn temporal_length_preserved_for_any_t(t in 1usize..64) {
        let cfg = TrackEncoderConfig {
            layers: 2,
            kernel_length: 9,
            channels: vec![3, 3],
            num_classes: 2,
            num_slots: 1,
        };
        let mut store = ParamStore::<f64>::new();
        let mut rng = seed::rng(11, "init");
        let enc = TrackEncoder::init(&mut store, "obj", &cfg, &mut rng).unwrap();
        let z = build_object_tensor::<f64>(&[], t, 1).unwrap();
        let mut sess = Session::new(&store, Tape::verify());
        let feats = enc.forward(&mut sess, &z).unwrap();
        for layer in &feats.layers {
            prop_assert_eq!(sess.tape.value(*layer).shape()[0], t);
        }
    }
}
