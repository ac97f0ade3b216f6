// temp diagnostic for the composed gradsuite check
use pathways::{joint_loss, FusionMode, Model, PathwayConfig};
use rand::Rng;
use tensor_core::{seed, GradBuffer, ParamStore, Session, Tape, Tensor, TensorRef};
use track_model::TrackEncoderConfig;

fn rt_pos(shape: Vec<usize>, key: &str) -> Tensor<f64> {
    let mut rng = seed::rng(2024, key);
    Tensor::from_fn(shape, |_| rng.gen_range(0.1..1.0))
}
fn micro_tracks(t: usize, key: &str) -> track_model::ObjectTensor<f64> {
    let mut rng = seed::rng(91, key);
    track_model::ObjectTensor {
        values: Tensor::from_fn(vec![t, 4], |_| rng.gen_range(0.0..1.0)),
        slots: vec![None],
    }
}
fn main() {
    let pcfg = PathwayConfig {
        frames_appearance: 2, rate_ratio: 2, appearance_widths: vec![6], beta_div: 2,
        blocks_per_stage: 1, temporal_kernel: 3, spatial_kernel: 3, entry_strides: vec![1],
        mgaf_sites: vec![1], attention_width: Some(3), num_classes: 3, lateral_kernel: 5,
    };
    let tcfg = TrackEncoderConfig { layers: 2, kernel_length: 3, channels: vec![3, 3], num_classes: 3, num_slots: 1 };
    let boost: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let mut model = Model::<f64>::build(FusionMode::APlusMgafMO, pcfg, tcfg, 38).unwrap();
    let boosts: Vec<(tensor_core::ParamId, Vec<f64>)> = model.store.iter()
        .filter(|(_, n, _)| n.starts_with("mgaf.") && (n.ends_with(".w_z") || n.ends_with(".w_u")))
        .map(|(id, _, t)| (id, t.data().iter().map(|v| v * boost).collect())).collect();
    for (id, vals) in boosts { model.store.set_values(id, vals).unwrap(); }
    println!("boost={boost}");
    let samples: Vec<(Tensor<f64>, track_model::ObjectTensor<f64>, usize)> = (0..3)
        .map(|i| (rt_pos(vec![4,4,4,3], &format!("comp_v{i}")), micro_tracks(4, &format!("comp_t{i}")), i % 3)).collect();

    let fwd = |store: &ParamStore<f64>| -> f64 {
        let mut sess = Session::new(store, Tape::verify());
        let mut total: Option<TensorRef> = None;
        for (vid, tr, label) in &samples {
            let out = model.forward(&mut sess, Some(vid), Some(tr), 0).unwrap();
            let loss = joint_loss(&mut sess, &out, *label, 1.0, 0.5).unwrap();
            let loss = sess.tape.scale(loss, 1.0/3.0).unwrap();
            total = Some(match total { Some(t) => sess.tape.add(t, loss).unwrap(), None => loss });
        }
        sess.tape.value(total.unwrap()).item()
    };
    let mut sess = Session::new(&model.store, Tape::verify());
    let mut total: Option<TensorRef> = None;
    for (vid, tr, label) in &samples {
        let out = model.forward(&mut sess, Some(vid), Some(tr), 0).unwrap();
        let loss = joint_loss(&mut sess, &out, *label, 1.0, 0.5).unwrap();
        let loss = sess.tape.scale(loss, 1.0/3.0).unwrap();
        total = Some(match total { Some(t) => sess.tape.add(t, loss).unwrap(), None => loss });
    }
    let lref = total.unwrap();
    sess.backward(lref).unwrap();
    let mut buf = GradBuffer::zeros_like(&model.store);
    sess.accumulate_grads(&mut buf);
    let eps = 1e-5;
    let mut rows: Vec<(f64, String, usize, f64, f64)> = Vec::new();
    let ids: Vec<_> = model.store.iter().map(|(id, n, _)| (id, n.to_string())).collect();
    let mut work = model.store.clone();
    for (id, name) in &ids {
        let n = model.store.get(*id).numel();
        for c in 0..n {
            let orig = model.store.get(*id).data()[c];
            let mut d = model.store.get(*id).data().to_vec();
            d[c] = orig + eps; work.set_values(*id, d.clone()).unwrap();
            let up = fwd(&work);
            d[c] = orig - eps; work.set_values(*id, d.clone()).unwrap();
            let down = fwd(&work);
            d[c] = orig; work.set_values(*id, d).unwrap();
            let num = (up - down) / (2.0 * eps);
            let a = buf.get(*id)[c];
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            rows.push((rel, name.clone(), c, a, num));
        }
    }
    rows.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (rel, name, c, a, num) in rows.iter().take(6) {
        println!("rel={rel:.3e} {name}[{c}] analytic={a:.6e} numeric={num:.6e}");
    }
}
