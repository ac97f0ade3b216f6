//! Object-tensor builder conformance: layout, zero padding, confidence-based
//! selection, hand priority, permutation invariance, translation pass-through.

use proptest::prelude::*;
use track_model::{build_object_tensor, BBox, Category, Detection};

fn det(
    frame: usize,
    cat: Category,
    id: Option<u32>,
    coords: (f64, f64, f64, f64),
    score: f64,
) -> Detection {
    Detection::new(
        frame,
        cat,
        id,
        BBox::new(coords.0, coords.1, coords.2, coords.3).unwrap(),
        score,
    )
    .unwrap()
}

#[test]
fn single_detection_layout() {
    let dets = vec![det(0, Category::Object, Some(0), (0.1, 0.2, 0.3, 0.4), 0.9)];
    let z = build_object_tensor::<f64>(&dets, 2, 2).unwrap();
    assert_eq!(z.values.shape(), &[2, 8]);
    assert_eq!(
        z.values.data(),
        &[0.1, 0.2, 0.3, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    );
    assert!(z.slots[0].is_some());
    assert!(z.slots[1].is_none());
}

#[test]
fn empty_detections_give_all_zero_tensor() {
    let z = build_object_tensor::<f64>(&[], 3, 2).unwrap();
    assert_eq!(z.values.shape(), &[3, 8]);
    assert!(z.values.data().iter().all(|&v| v == 0.0));
    assert!(z.slots.iter().all(|s| s.is_none()));
}

#[test]
fn lowest_scoring_surplus_track_is_dropped() {
    let dets = vec![
        det(0, Category::Object, Some(0), (0.1, 0.1, 0.2, 0.2), 0.9),
        det(0, Category::Object, Some(1), (0.3, 0.3, 0.4, 0.4), 0.8),
        det(0, Category::Object, Some(2), (0.5, 0.5, 0.6, 0.6), 0.7),
    ];
    let z = build_object_tensor::<f64>(&dets, 1, 2).unwrap();
    let slots: Vec<_> = z.slots.iter().flatten().map(|s| s.track_id).collect();
    assert_eq!(slots, vec![Some(0), Some(1)]);
    // Track 2's box never appears.
    assert!(!z.values.data().contains(&0.5));
}

#[test]
fn hands_are_assigned_before_higher_scoring_objects() {
    let dets = vec![
        det(0, Category::Object, Some(7), (0.3, 0.3, 0.4, 0.4), 0.99),
        det(0, Category::Hand, Some(3), (0.1, 0.1, 0.2, 0.2), 0.10),
    ];
    let z = build_object_tensor::<f64>(&dets, 1, 2).unwrap();
    let s0 = z.slots[0].as_ref().unwrap();
    assert_eq!(s0.category, Category::Hand);
    assert_eq!(s0.track_id, Some(3));
    let s1 = z.slots[1].as_ref().unwrap();
    assert_eq!(s1.category, Category::Object);
}

#[test]
fn missing_frames_stay_zero() {
    let dets = vec![
        det(0, Category::Object, Some(0), (0.1, 0.1, 0.2, 0.2), 0.9),
        det(2, Category::Object, Some(0), (0.2, 0.2, 0.3, 0.3), 0.9),
    ];
    let z = build_object_tensor::<f64>(&dets, 3, 1).unwrap();
    let row1 = &z.values.data()[4..8];
    assert!(row1.iter().all(|&v| v == 0.0));
}

#[test]
fn frame_out_of_range_is_error() {
    let dets = vec![det(5, Category::Object, Some(0), (0.1, 0.1, 0.2, 0.2), 0.9)];
    assert!(build_object_tensor::<f64>(&dets, 4, 1).is_err());
}

#[test]
fn malformed_bbox_rejected_at_construction() {
    assert!(BBox::new(0.5, 0.1, 0.2, 0.2).is_err()); // x1 > x2
    assert!(BBox::new(-0.1, 0.1, 0.2, 0.2).is_err()); // out of range
    assert!(Detection::new(
        0,
        Category::Object,
        None,
        BBox::new(0.1, 0.1, 0.2, 0.2).unwrap(),
        1.5
    )
    .is_err());
}

#[test]
fn translation_shifts_assigned_coordinates_exactly() {
    let delta = 0.17;
    let base = vec![
        det(0, Category::Hand, Some(0), (0.2, 0.3, 0.4, 0.5), 0.8),
        det(1, Category::Object, Some(1), (0.1, 0.1, 0.3, 0.3), 0.6),
    ];
    let shifted: Vec<Detection> = base
        .iter()
        .map(|d| {
            det(
                d.frame_index,
                d.category,
                d.track_id,
                (
                    d.bbox.x1 + delta,
                    d.bbox.y1 + delta,
                    d.bbox.x2 + delta,
                    d.bbox.y2 + delta,
                ),
                d.score,
            )
        })
        .collect();
    let z0 = build_object_tensor::<f64>(&base, 2, 2).unwrap();
    let z1 = build_object_tensor::<f64>(&shifted, 2, 2).unwrap();
    for (a, b) in z0.values.data().iter().zip(z1.values.data()) {
        if *a != 0.0 {
            assert!((b - a - delta).abs() < 1e-12);
        } else {
            assert_eq!(*b, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn builder_is_permutation_invariant(
        seed in 0u64..1000,
        n in 1usize..12,
    ) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = tensor_core::seed::rng(seed, "perm");
        let mut dets = Vec::new();
        for _ in 0..n {
            let frame = rng.gen_range(0usize..4);
            let cat = if rng.gen_bool(0.3) { Category::Hand } else { Category::Object };
            let id = if rng.gen_bool(0.2) { None } else { Some(rng.gen_range(0u32..4)) };
            let x1: f64 = rng.gen_range(0.0..0.5);
            let y1: f64 = rng.gen_range(0.0..0.5);
            let w: f64 = rng.gen_range(0.0..0.4);
            let h: f64 = rng.gen_range(0.0..0.4);
            let score: f64 = rng.gen_range(0.0..1.0);
            dets.push(det(frame, cat, id, (x1, y1, x1 + w, y1 + h), score));
        }
        let z0 = build_object_tensor::<f64>(&dets, 4, 2).unwrap();
        let mut shuffled = dets.clone();
        shuffled.shuffle(&mut rng);
        let z1 = build_object_tensor::<f64>(&shuffled, 4, 2).unwrap();
        prop_assert_eq!(z0.values.data(), z1.values.data());
        prop_assert_eq!(z0.slots, z1.slots);
    }
}
