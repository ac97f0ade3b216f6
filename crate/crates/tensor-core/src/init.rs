//! Seeded weight initialization. Samples are drawn in f64 and converted, so
//! the f32 and f64 paths start from the same values.

use crate::real::Real;
use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// He-normal (fan-in) initialization used for convolution weights.
pub fn he_normal<F: Real>(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<F> {
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            F::from_f64(z * std)
        })
        .collect();
    Tensor::new(shape, data).expect("init shape")
}

/// Xavier-uniform initialization used for attention projections and linear
/// heads.
pub fn xavier_uniform<F: Real>(
    shape: Vec<usize>,
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| F::from_f64(rng.gen_range(-limit..limit)))
        .collect();
    Tensor::new(shape, data).expect("init shape")
}
