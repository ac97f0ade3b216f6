use crate::error::{Result, TensorError};
use crate::real::Real;
use crate::tape::{Tape, TensorRef};
use crate::tensor::Tensor;

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Ordered collection of named parameter tensors. Names are unique; order is
/// the registration order, which checkpointing and gradient merging rely on.
#[derive(Clone, Debug)]
pub struct ParamStore<F: Real> {
    entries: Vec<(String, Tensor<F>)>,
}

impl<F: Real> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<F>) -> Result<ParamId> {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(TensorError::DuplicateParam { name });
        }
        self.entries.push((name, value.with_grad()));
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.entries[id.0].1
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.entries[id.0].1
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<F>)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries
            .iter()
            .position(|(n, _)| n == name)
            .map(ParamId)
    }

    /// Total scalar count — the brute-force parameter enumeration.
    pub fn total_parameters(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Overwrites one parameter's values (checkpoint load, perturbation).
    pub fn set_values(&mut self, id: ParamId, data: Vec<F>) -> Result<()> {
        self.entries[id.0].1.set_data(data)
    }

    /// Copies values from `other` for every parameter whose name and shape
    /// match; returns how many were copied. Used to align shared weights
    /// across models of different modes.
    pub fn copy_matching_values(&mut self, other: &ParamStore<F>) -> usize {
        let mut copied = 0;
        for i in 0..self.entries.len() {
            let name = self.entries[i].0.clone();
            if let Some(src) = other.find(&name) {
                let src_t = other.get(src);
                if src_t.shape() == self.entries[i].1.shape() {
                    self.entries[i].1.set_data(src_t.data().to_vec()).unwrap();
                    copied += 1;
                }
            }
        }
        copied
    }

    pub fn zero_grads(&mut self) {
        for (_, t) in self.entries.iter_mut() {
            t.zero_grad();
        }
    }
}

/// Per-parameter gradient accumulator aligned with a [`ParamStore`].
/// Batch-parallel evaluation produces one buffer per sample; buffers are
/// merged in sample order so reductions stay deterministic.
#[derive(Clone, Debug)]
pub struct GradBuffer<F: Real> {
    grads: Vec<Vec<F>>,
}

impl<F: Real> GradBuffer<F> {
    pub fn zeros_like(store: &ParamStore<F>) -> Self {
        GradBuffer {
            grads: store
                .entries
                .iter()
                .map(|(_, t)| vec![F::zero(); t.numel()])
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[F] {
        &self.grads[id.0]
    }

    pub fn add_from(&mut self, other: &GradBuffer<F>) {
        for (dst, src) in self.grads.iter_mut().zip(&other.grads) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: F) {
        for g in self.grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<F>> {
        self.grads.iter()
    }

    pub fn max_abs(&self) -> f64 {
        self.grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v.to_double().abs())
            .fold(0.0, f64::max)
    }
}

/// One forward/backward pass: a tape plus the mapping from watched parameters
/// to their on-tape leaves. Parameters are watched at most once per session.
pub struct Session<'a, F: Real> {
    pub tape: Tape<F>,
    store: &'a ParamStore<F>,
    watched: Vec<Option<TensorRef>>,
}

impl<'a, F: Real> Session<'a, F> {
    pub fn new(store: &'a ParamStore<F>, tape: Tape<F>) -> Self {
        let watched = vec![None; store.len()];
        Session {
            tape,
            store,
            watched,
        }
    }

    pub fn store(&self) -> &ParamStore<F> {
        self.store
    }

    /// Leafs the parameter onto the tape (memoized per session).
    pub fn param(&mut self, id: ParamId) -> TensorRef {
        if let Some(r) = self.watched[id.0] {
            return r;
        }
        let r = self.tape.leaf(self.store.get(id));
        self.watched[id.0] = Some(r);
        r
    }

    /// Leafs a non-trainable input (video frames, object tensors, labels stay
    /// out of the tape entirely).
    pub fn input(&mut self, t: &Tensor<F>) -> TensorRef {
        self.tape.constant(t.clone())
    }

    pub fn backward(&mut self, loss: TensorRef) -> Result<()> {
        self.tape.backward(loss)
    }

    /// Adds this session's parameter gradients into `buf`.
    pub fn accumulate_grads(&self, buf: &mut GradBuffer<F>) {
        for (i, watched) in self.watched.iter().enumerate() {
            if let Some(r) = watched {
                if let Some(g) = self.tape.grad(*r) {
                    let dst = &mut buf.grads[i];
                    for (d, &s) in dst.iter_mut().zip(g) {
                        *d += s;
                    }
                }
            }
        }
    }
}
