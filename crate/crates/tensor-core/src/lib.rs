//! Minimal dense tensor engine with reverse-mode automatic differentiation.
//!
//! Everything is CPU-only and define-by-run: ops executed through a [`Tape`]
//! record enough information to replay adjoints in exact reverse order.
//! Double precision is the verification mode (finite-difference checks,
//! acceptance suites); single precision is available for speed runs through
//! the same generic code path.

mod error;
mod gemm;
mod gradcheck;
mod init;
mod optim;
mod params;
mod real;
pub mod seed;
mod tape;
mod tensor;

pub use error::{Result, TensorError};
pub use gemm::{gemm, gemm_at_b, gemm_a_bt};
pub use gradcheck::{grad_check, grad_check_params, GradCheckReport, DEFAULT_EPS, DEFAULT_TOL};
pub use init::{he_normal, xavier_uniform};
pub use optim::{sgd_step, Sgd};
pub use params::{GradBuffer, ParamId, ParamStore, Session};
pub use real::Real;
pub use tape::{Mode, PointwiseFn, PoolKind, Tape, TensorRef};
pub use tensor::Tensor;
