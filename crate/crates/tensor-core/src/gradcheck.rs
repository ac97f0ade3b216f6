//! Central finite-difference gradient checking. The numeric side uses only
//! forward evaluations, so it stays an independent oracle for the adjoints.
//!
//! Relative error per coordinate: `|a - n| / max(|a|, |n|, 1e-8)`.

use crate::error::TensorError;
use std::result::Result;
use crate::params::{GradBuffer, ParamStore, Session};
use crate::tape::{Tape, TensorRef};
use crate::tensor::Tensor;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOL: f64 = 1e-4;
const ERR_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_input: usize,
    pub worst_coord: usize,
    pub coords_checked: usize,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tol
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ERR_FLOOR)
}

/// Checks the gradient of a scalar-valued function of free tensors.
///
/// `build` re-runs the forward on every call: once with gradients enabled for
/// the analytic side, then twice per coordinate for the central differences.
pub fn grad_check<B, E>(
    build: B,
    inputs: &[Tensor<f64>],
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, E>
where
    B: Fn(&mut Tape<f64>, &[TensorRef]) -> Result<TensorRef, E>,
    E: From<TensorError>,
{
    // Analytic gradients.
    let mut tape = Tape::verify();
    let refs: Vec<TensorRef> = inputs
        .iter()
        .map(|t| tape.leaf(&t.clone().with_grad()))
        .collect();
    let loss = build(&mut tape, &refs)?;
    tape.backward(loss).map_err(E::from)?;
    let analytic: Vec<Vec<f64>> = refs
        .iter()
        .map(|&r| tape.grad(r).map(|g| g.to_vec()).unwrap_or_default())
        .collect();

    let eval = |perturbed: &[Tensor<f64>]| -> Result<f64, E> {
        let mut tape = Tape::verify();
        let refs: Vec<TensorRef> = perturbed.iter().map(|t| tape.leaf(t)).collect();
        let loss = build(&mut tape, &refs)?;
        Ok(tape.value(loss).item())
    };

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_input: 0,
        worst_coord: 0,
        coords_checked: 0,
        tol,
    };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (ii, input) in inputs.iter().enumerate() {
        for coord in 0..input.numel() {
            let orig = input.data()[coord];

            work[ii].data_mut()[coord] = orig + eps;
            let up = eval(&work)?;
            work[ii].data_mut()[coord] = orig - eps;
            let down = eval(&work)?;
            work[ii].data_mut()[coord] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = analytic
                .get(ii)
                .and_then(|g| g.get(coord).copied())
                .unwrap_or(0.0);
            let err = rel_err(a, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_input = ii;
                report.worst_coord = coord;
            }
        }
    }
    Ok(report)
}

/// Finite-difference check over every parameter of a model forward.
///
/// `forward` must build a scalar loss from the session (inputs are captured
/// by the closure). The analytic side runs backward once; the numeric side
/// re-runs the forward with each coordinate of each parameter perturbed.
pub fn grad_check_params<B, E>(
    forward: B,
    store: &ParamStore<f64>,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, E>
where
    B: Fn(&mut Session<f64>) -> Result<TensorRef, E>,
    E: From<TensorError>,
{
    let mut sess = Session::new(store, Tape::verify());
    let loss = forward(&mut sess)?;
    sess.backward(loss).map_err(E::from)?;
    let mut analytic = GradBuffer::zeros_like(store);
    sess.accumulate_grads(&mut analytic);

    let eval = |store: &ParamStore<f64>| -> Result<f64, E> {
        let mut sess = Session::new(store, Tape::verify());
        let loss = forward(&mut sess)?;
        Ok(sess.tape.value(loss).item())
    };

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_input: 0,
        worst_coord: 0,
        coords_checked: 0,
        tol,
    };
    let mut work = store.clone();
    let ids: Vec<_> = store.iter().map(|(id, _, _)| id).collect();
    for id in ids {
        let numel = store.get(id).numel();
        for coord in 0..numel {
            let orig = store.get(id).data()[coord];

            work.get_mut(id).data_mut()[coord] = orig + eps;
            let up = eval(&work)?;
            work.get_mut(id).data_mut()[coord] = orig - eps;
            let down = eval(&work)?;
            work.get_mut(id).data_mut()[coord] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.get(id)[coord];
            let err = rel_err(a, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_input = id.0;
                report.worst_coord = coord;
            }
        }
    }
    Ok(report)
}
