use thiserror::Error;

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: expected rank {expected}, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },

    #[error("{op}: axis {axis} out of range for rank {rank}")]
    InvalidAxis {
        op: &'static str,
        axis: usize,
        rank: usize,
    },

    #[error("tensor data length {got} does not match shape product {expected}")]
    DataLength { expected: usize, got: usize },

    #[error("shape {shape:?} has a zero extent")]
    ZeroExtent { shape: Vec<usize> },

    #[error("{op}: kernel length {len} is even; a symmetric center requires odd length")]
    EvenKernel { op: &'static str, len: usize },

    #[error("{op}: kernel {kernel} larger than padded input extent {extent}")]
    KernelTooLarge {
        op: &'static str,
        kernel: usize,
        extent: usize,
    },

    #[error("{op}: pooling window {window:?} does not match extents {extent:?}")]
    WindowMismatch {
        op: &'static str,
        window: (usize, usize),
        extent: (usize, usize),
    },

    #[error("{op}: produced a non-finite value (verification mode)")]
    NonFinite { op: &'static str },

    #[error("{op}: expected a scalar, got shape {shape:?}")]
    NotScalar { op: &'static str, shape: Vec<usize> },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("{op}: label count {labels} does not match batch size {batch}")]
    LabelCount {
        op: &'static str,
        labels: usize,
        batch: usize,
    },

    #[error("parameter name already registered: {name}")]
    DuplicateParam { name: String },

    #[error("{op}: invalid stride {stride}")]
    InvalidStride { op: &'static str, stride: usize },
}
