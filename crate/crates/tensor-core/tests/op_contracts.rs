//! Value-level contracts for every tape op: hand-expanded examples plus the
//! algebraic invariants (softmax normalization/shift-invariance, temporal
//! length preservation, adjoint linearity, the NaN guard).

use proptest::prelude::*;
use tensor_core::{Mode, PointwiseFn, PoolKind, Tape, Tensor, TensorError};

fn t64(shape: Vec<usize>, data: Vec<f64>) -> Tensor<f64> {
    Tensor::new(shape, data).unwrap()
}

#[test]
fn matmul_identity_and_row_sums() {
    let mut tape = Tape::verify();
    let eye = tape.constant(t64(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]));
    let a = tape.constant(t64(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
    let out = tape.matmul(eye, a).unwrap();
    assert_eq!(tape.value(out).data(), &[1.0, 2.0, 3.0, 4.0]);

    let ones = tape.constant(t64(vec![2, 1], vec![1.0, 1.0]));
    let sums = tape.matmul(a, ones).unwrap();
    assert_eq!(tape.value(sums).data(), &[3.0, 7.0]);
}

#[test]
fn matmul_dimension_mismatch_is_error() {
    let mut tape = Tape::<f64>::verify();
    let a = tape.constant(Tensor::zeros(vec![2, 3]));
    let b = tape.constant(Tensor::zeros(vec![2, 3]));
    assert!(matches!(
        tape.matmul(a, b),
        Err(TensorError::ShapeMismatch { op: "matmul", .. })
    ));
}

#[test]
fn softmax_uniform_forced_and_shift_safe() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![3], vec![0.0, 0.0, 0.0]));
    let y = tape.softmax(x, 0).unwrap();
    for &v in tape.value(y).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    let x = tape.constant(t64(vec![2], vec![0.0, 3.0f64.ln()]));
    let y = tape.softmax(x, 0).unwrap();
    let d = tape.value(y).data();
    assert!((d[0] - 0.25).abs() < 1e-12);
    assert!((d[1] - 0.75).abs() < 1e-12);

    // Max-shifting keeps huge logits finite.
    let x = tape.constant(t64(vec![2], vec![1000.0, 1000.0]));
    let y = tape.softmax(x, 0).unwrap();
    let d = tape.value(y).data();
    assert!((d[0] - 0.5).abs() < 1e-12 && (d[1] - 0.5).abs() < 1e-12);
}

#[test]
fn conv_temporal_delta_kernel_is_identity() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![5, 1], vec![2.0, -1.0, 0.5, 3.0, 7.0]));
    let w = tape.constant(t64(vec![3, 1, 1], vec![0.0, 1.0, 0.0]));
    let b = tape.constant(Tensor::zeros(vec![1]));
    let y = tape.conv_temporal(x, w, b).unwrap();
    assert_eq!(tape.value(y).data(), tape.value(x).data());
}

#[test]
fn conv_temporal_moving_sum_with_zero_pad() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![4, 1], vec![1.0, 2.0, 3.0, 4.0]));
    let w = tape.constant(t64(vec![3, 1, 1], vec![1.0, 1.0, 1.0]));
    let b = tape.constant(Tensor::zeros(vec![1]));
    let y = tape.conv_temporal(x, w, b).unwrap();
    assert_eq!(tape.value(y).data(), &[3.0, 6.0, 9.0, 7.0]);
}

#[test]
fn conv_temporal_rejects_even_kernel() {
    let mut tape = Tape::<f64>::verify();
    let x = tape.constant(Tensor::zeros(vec![4, 1]));
    let w = tape.constant(Tensor::zeros(vec![2, 1, 1]));
    let b = tape.constant(Tensor::zeros(vec![1]));
    assert!(matches!(
        tape.conv_temporal(x, w, b),
        Err(TensorError::EvenKernel { .. })
    ));
}

#[test]
fn conv_spatial_pointwise_identity_channel_map() {
    // k=1 kernel that maps each channel to itself leaves the input unchanged.
    let mut tape = Tape::verify();
    let x = tape.constant(Tensor::from_fn(vec![2, 3, 3, 2], |i| (i as f64) * 0.1));
    let w = tape.constant(t64(vec![1, 1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]));
    let b = tape.constant(Tensor::zeros(vec![2]));
    let y = tape.conv_spatial(x, w, b, 1).unwrap();
    assert_eq!(tape.value(y).data(), tape.value(x).data());
}

#[test]
fn conv_spatial_delta_response_is_neighborhood_indicator() {
    // One-hot center pixel, all-ones 3x3 kernel: output marks the 3x3 block.
    let mut tape = Tape::verify();
    let mut frame = vec![0.0; 9];
    frame[4] = 1.0; // center of the 3x3 frame
    let x = tape.constant(t64(vec![1, 3, 3, 1], frame));
    let w = tape.constant(t64(vec![3, 3, 1, 1], vec![1.0; 9]));
    let b = tape.constant(Tensor::zeros(vec![1]));
    let y = tape.conv_spatial(x, w, b, 1).unwrap();
    assert_eq!(tape.value(y).data(), &[1.0; 9]);
}

#[test]
fn pointwise_examples() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![1], vec![0.0]));
    let y = tape.pointwise(x, PointwiseFn::Sigmoid).unwrap();
    assert_eq!(tape.value(y).data(), &[0.5]);

    let x = tape.constant(t64(vec![2], vec![-1.0, 2.0]));
    let y = tape.pointwise(x, PointwiseFn::Relu).unwrap();
    assert_eq!(tape.value(y).data(), &[0.0, 2.0]);
}

#[test]
fn layer_norm_constant_slice_collapses_to_bias() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![3], vec![5.0, 5.0, 5.0]));
    let g = tape.constant(Tensor::full(vec![3], 1.0));
    let b = tape.constant(Tensor::zeros(vec![3]));
    let y = tape.layer_norm(x, 0, g, b, 1e-5).unwrap();
    for &v in tape.value(y).data() {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn layer_norm_two_point_slice() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![2], vec![1.0, 3.0]));
    let g = tape.constant(Tensor::full(vec![2], 1.0));
    let b = tape.constant(Tensor::zeros(vec![2]));
    let y = tape.layer_norm(x, 0, g, b, 1e-12).unwrap();
    let d = tape.value(y).data();
    assert!((d[0] + 1.0).abs() < 1e-6);
    assert!((d[1] - 1.0).abs() < 1e-6);
}

#[test]
fn pool_spatial_average() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![1, 2, 2, 1], vec![1.0, 3.0, 5.0, 7.0]));
    let y = tape.spatial_avg(x).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 1]);
    assert_eq!(tape.value(y).data(), &[4.0]);

    let c = tape.constant(Tensor::full(vec![3, 4, 4, 2], 2.5));
    let y = tape.spatial_avg(c).unwrap();
    for &v in tape.value(y).data() {
        assert!((v - 2.5).abs() < 1e-12);
    }
    let g = tape.global_avg(c).unwrap();
    assert_eq!(tape.value(g).shape(), &[2]);
    for &v in tape.value(g).data() {
        assert!((v - 2.5).abs() < 1e-12);
    }
}

#[test]
fn pool_window_mismatch_is_error() {
    let mut tape = Tape::<f64>::verify();
    let x = tape.constant(Tensor::zeros(vec![1, 2, 2, 1]));
    assert!(matches!(
        tape.pool(x, PoolKind::SpatialAvg, Some((4, 4))),
        Err(TensorError::WindowMismatch { .. })
    ));
}

#[test]
fn cross_entropy_uniform_and_saturated() {
    let mut tape = Tape::<f64>::verify();
    let logits = tape.constant(Tensor::zeros(vec![1, 4]));
    let loss = tape.cross_entropy(logits, &[2]).unwrap();
    assert!((tape.value(loss).item() - 4.0f64.ln()).abs() < 1e-12);

    let logits = tape.constant(t64(vec![1, 2], vec![30.0, -30.0]));
    let loss = tape.cross_entropy(logits, &[0]).unwrap();
    assert!(tape.value(loss).item() < 1e-12);

    let logits = tape.constant(Tensor::zeros(vec![2, 3]));
    assert!(matches!(
        tape.cross_entropy(logits, &[0, 5]),
        Err(TensorError::LabelOutOfRange { label: 5, .. })
    ));
}

#[test]
fn backward_of_sum_and_square() {
    let mut tape = Tape::verify();
    let x = tape.leaf(&t64(vec![3], vec![1.0, -2.0, 0.5]).with_grad());
    let s = tape.sum(x).unwrap();
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[1.0, 1.0, 1.0]);

    let mut tape = Tape::verify();
    let x = tape.leaf(&t64(vec![3], vec![1.0, -2.0, 0.5]).with_grad());
    let sq = tape.mul(x, x).unwrap();
    let s = tape.sum(sq).unwrap();
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[2.0, -4.0, 1.0]);
}

#[test]
fn backward_requires_scalar() {
    let mut tape = Tape::verify();
    let x = tape.leaf(&t64(vec![2], vec![1.0, 2.0]).with_grad());
    assert!(matches!(
        tape.backward(x),
        Err(TensorError::NotScalar { .. })
    ));
}

#[test]
fn adjoint_linearity_of_summed_losses() {
    // backward(l1 + l2) == backward(l1) + backward(l2), within 1e-12.
    let xv = t64(vec![4], vec![0.3, -1.2, 2.0, 0.7]).with_grad();

    let mut tape = Tape::verify();
    let x = tape.leaf(&xv);
    let sq = tape.mul(x, x).unwrap();
    let l1 = tape.sum(sq).unwrap();
    let sig = tape.sigmoid(x).unwrap();
    let l2 = tape.sum(sig).unwrap();
    let total = tape.add(l1, l2).unwrap();
    tape.backward(total).unwrap();
    let combined = tape.grad(x).unwrap().to_vec();

    let mut tape1 = Tape::verify();
    let x1 = tape1.leaf(&xv);
    let sq = tape1.mul(x1, x1).unwrap();
    let l1 = tape1.sum(sq).unwrap();
    tape1.backward(l1).unwrap();
    let g1 = tape1.grad(x1).unwrap().to_vec();

    let mut tape2 = Tape::verify();
    let x2 = tape2.leaf(&xv);
    let sig = tape2.sigmoid(x2).unwrap();
    let l2 = tape2.sum(sig).unwrap();
    tape2.backward(l2).unwrap();
    let g2 = tape2.grad(x2).unwrap().to_vec();

    for i in 0..4 {
        assert!((combined[i] - (g1[i] + g2[i])).abs() < 1e-12);
    }
}

#[test]
fn verification_mode_names_offending_op() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![1], vec![f64::NAN]));
    match tape.sigmoid(x) {
        Err(TensorError::NonFinite { op }) => assert_eq!(op, "sigmoid"),
        other => panic!("expected NonFinite, got {other:?}"),
    }

    // Overflow to infinity is caught too.
    let y = tape.constant(t64(vec![1], vec![1e308]));
    match tape.scale(y, 10.0) {
        Err(TensorError::NonFinite { op }) => assert_eq!(op, "scale"),
        other => panic!("expected NonFinite, got {other:?}"),
    }

    // Fast mode lets it through.
    let mut tape = Tape::new(Mode::Fast);
    let x = tape.constant(t64(vec![1], vec![f64::NAN]));
    assert!(tape.sigmoid(x).is_ok());
}

#[test]
fn time_interp_identity_and_single_key() {
    let mut tape = Tape::verify();
    let x = tape.constant(t64(vec![2, 1], vec![1.0, 3.0]));
    let same = tape.time_interp(x, 2).unwrap();
    assert_eq!(same, x);

    let up = tape.time_interp(x, 3).unwrap();
    assert_eq!(tape.value(up).data(), &[1.0, 2.0, 3.0]);

    let one = tape.constant(t64(vec![1, 2], vec![4.0, 5.0]));
    let rep = tape.time_interp(one, 3).unwrap();
    assert_eq!(tape.value(rep).data(), &[4.0, 5.0, 4.0, 5.0, 4.0, 5.0]);
}

#[test]
fn concat_channels_layout() {
    let mut tape = Tape::verify();
    let a = tape.constant(t64(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]));
    let b = tape.constant(t64(vec![2, 1], vec![9.0, 8.0]));
    let y = tape.concat_channels(&[a, b]).unwrap();
    assert_eq!(tape.value(y).shape(), &[2, 3]);
    assert_eq!(tape.value(y).data(), &[1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_slices_sum_to_one_and_shift_invariant(
        vals in proptest::collection::vec(-50.0f64..50.0, 2..24),
        shift in -100.0f64..100.0,
    ) {
        let n = vals.len();
        let mut tape = Tape::verify();
        let x = tape.constant(t64(vec![n], vals.clone()));
        let y = tape.softmax(x, 0).unwrap();
        let sum: f64 = tape.value(y).data().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);

        let shifted = tape.constant(t64(vec![n], vals.iter().map(|v| v + shift).collect()));
        let ys = tape.softmax(shifted, 0).unwrap();
        for (a, b) in tape.value(y).data().iter().zip(tape.value(ys).data()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn temporal_ops_preserve_time_extent(t in 1usize..64, c in 1usize..5) {
        let mut tape = Tape::verify();
        let x = tape.constant(Tensor::from_fn(vec![t, c], |i| (i as f64 * 0.37).sin()));
        let w = tape.constant(Tensor::from_fn(vec![9, c, 3], |i| (i as f64 * 0.11).cos()));
        let b = tape.constant(Tensor::zeros(vec![3]));
        let y = tape.conv_temporal(x, w, b).unwrap();
        prop_assert_eq!(tape.value(y).shape(), &[t, 3]);

        let g = tape.constant(Tensor::full(vec![c], 1.0));
        let bb = tape.constant(Tensor::zeros(vec![c]));
        let ln = tape.layer_norm(x, 1, g, bb, 1e-5).unwrap();
        prop_assert_eq!(tape.value(ln).shape(), &[t, c]);
    }
}
