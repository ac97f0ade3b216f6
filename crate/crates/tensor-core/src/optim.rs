use crate::error::{Result, TensorError};
use crate::params::{GradBuffer, ParamStore};
use crate::real::Real;

/// SGD with classical momentum and decoupled-from-nothing weight decay folded
/// into the gradient:
///
/// ```text
/// v <- momentum * v + g + weight_decay * p
/// p <- p - lr * v
/// ```
///
/// Deterministic and in-place; the velocity buffers live here so the store
/// stays a plain value container.
pub struct Sgd<F: Real> {
    pub lr: F,
    pub momentum: F,
    pub weight_decay: F,
    velocity: Vec<Vec<F>>,
}

impl<F: Real> Sgd<F> {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64) -> Self {
        Sgd {
            lr: F::from_f64(lr),
            momentum: F::from_f64(momentum),
            weight_decay: F::from_f64(weight_decay),
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, params: &mut ParamStore<F>, grads: &GradBuffer<F>) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = params
                .iter()
                .map(|(_, _, t)| vec![F::zero(); t.numel()])
                .collect();
        }
        let ids: Vec<_> = params.iter().map(|(id, _, _)| id).collect();
        for id in ids {
            let g = grads.get(id);
            let p = params.get_mut(id);
            if g.len() != p.numel() {
                return Err(TensorError::DataLength {
                    expected: p.numel(),
                    got: g.len(),
                });
            }
            let v = &mut self.velocity[id.0];
            let data = p.data_mut();
            for ((pv, vv), &gv) in data.iter_mut().zip(v.iter_mut()).zip(g) {
                let eff = gv + self.weight_decay * *pv;
                *vv = self.momentum * *vv + eff;
                *pv -= self.lr * *vv;
            }
        }
        Ok(())
    }
}

/// One plain SGD update (no state): `p <- p - lr * g` with optional momentum
/// buffer handled by the caller. Matches the spec-level operation for tests.
pub fn sgd_step<F: Real>(
    params: &mut ParamStore<F>,
    grads: &GradBuffer<F>,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
    velocity: &mut Vec<Vec<F>>,
) -> Result<()> {
    if velocity.is_empty() {
        *velocity = params
            .iter()
            .map(|(_, _, t)| vec![F::zero(); t.numel()])
            .collect();
    }
    let lr = F::from_f64(lr);
    let momentum = F::from_f64(momentum);
    let weight_decay = F::from_f64(weight_decay);
    let ids: Vec<_> = params.iter().map(|(id, _, _)| id).collect();
    for id in ids {
        let g = grads.get(id);
        let p = params.get_mut(id);
        if g.len() != p.numel() {
            return Err(TensorError::DataLength {
                expected: p.numel(),
                got: g.len(),
            });
        }
        let v = &mut velocity[id.0];
        for ((pv, vv), &gv) in p.data_mut().iter_mut().zip(v.iter_mut()).zip(g) {
            let eff = gv + weight_decay * *pv;
            *vv = momentum * *vv + eff;
            *pv -= lr * *vv;
        }
    }
    Ok(())
}
