//! Rough single-core GEMM throughput probe. Ignored by default; run with
//! `cargo test -p tensor-core --test bench_gemm -- --ignored --nocapture`
//! when sizing experiment configs for a new machine.

use std::time::Instant;
use tensor_core::gemm;

fn bench<F: tensor_core::Real>(m: usize, k: usize, n: usize, reps: usize) -> f64 {
    let a: Vec<F> = (0..m * k).map(|i| F::from_f64((i as f64 * 0.7).sin())).collect();
    let b: Vec<F> = (0..k * n).map(|i| F::from_f64((i as f64 * 1.3).cos())).collect();
    let mut c = vec![F::zero(); m * n];
    let start = Instant::now();
    for _ in 0..reps {
        c.iter_mut().for_each(|v| *v = F::zero());
        gemm(m, k, n, &a, &b, &mut c);
    }
    let secs = start.elapsed().as_secs_f64();
    (2.0 * (m * k * n * reps) as f64) / secs / 1e9
}

#[test]
#[ignore]
fn gemm_throughput() {
    for (m, k, n, reps) in [
        (1024, 144, 16, 200),
        (1024, 144, 32, 200),
        (256, 288, 32, 400),
        (512, 512, 64, 40),
    ] {
        let gf64 = bench::<f64>(m, k, n, reps);
        let gf32 = bench::<f32>(m, k, n, reps);
        println!("{m}x{k}x{n}: f64 {gf64:.2} GFLOP/s, f32 {gf32:.2} GFLOP/s");
    }
}
