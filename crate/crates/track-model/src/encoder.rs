use crate::error::{Result, TrackError};
use crate::object_tensor::ObjectTensor;
use tensor_core::seed::ChaCha8Rng;
use tensor_core::{
    he_normal, xavier_uniform, ParamId, ParamStore, Real, Session, Tensor, TensorRef,
};

/// Temporal-convolution encoder over the object tensor: `layers` stride-1
/// convolutions of odd `kernel_length`, each followed by (non-affine)
/// layer-norm and ReLU. No temporal pooling until the final global average.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackEncoderConfig {
    pub layers: usize,
    pub kernel_length: usize,
    pub channels: Vec<usize>,
    pub num_classes: usize,
    pub num_slots: usize,
}

impl TrackEncoderConfig {
    /// Desk-scale default: 5 layers of 64 channels, length-9 kernels, D = 4.
    pub fn desk_default(num_classes: usize) -> Self {
        TrackEncoderConfig {
            layers: 5,
            kernel_length: 9,
            channels: vec![64; 5],
            num_classes,
            num_slots: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(TrackError::InvalidConfig {
                reason: "layers must be >= 1".into(),
            });
        }
        if self.kernel_length % 2 == 0 {
            return Err(TrackError::InvalidConfig {
                reason: format!("kernel length {} must be odd", self.kernel_length),
            });
        }
        if self.channels.len() != self.layers {
            return Err(TrackError::InvalidConfig {
                reason: format!(
                    "channel list length {} != layer count {}",
                    self.channels.len(),
                    self.layers
                ),
            });
        }
        if self.channels.iter().any(|&c| c == 0) || self.num_classes == 0 || self.num_slots == 0 {
            return Err(TrackError::InvalidConfig {
                reason: "extents must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        4 * self.num_slots
    }
}

/// Exact analytic parameter count:
/// `sum_l (k * C_{l-1} * C_l + C_l) + C_L * K + K` with `C_0 = 4D`.
pub fn count_parameters(cfg: &TrackEncoderConfig) -> usize {
    let mut total = 0;
    let mut c_prev = cfg.input_width();
    for &c in &cfg.channels {
        total += cfg.kernel_length * c_prev * c + c;
        c_prev = c;
    }
    total + c_prev * cfg.num_classes + cfg.num_classes
}

/// Parameter handles for the encoder. Layer norms are non-affine (fixed
/// gain 1, bias 0) so the parameter set is exactly the convs plus the head.
pub struct TrackEncoder {
    cfg: TrackEncoderConfig,
    convs: Vec<(ParamId, ParamId)>,
    head: (ParamId, ParamId),
}

/// Per-layer features, the pooled embedding, and the object-head logits.
pub struct TrackFeatures {
    pub layers: Vec<TensorRef>,
    pub pooled: TensorRef,
    pub logits: TensorRef,
}

impl TrackEncoder {
    pub fn init<F: Real>(
        store: &mut ParamStore<F>,
        prefix: &str,
        cfg: &TrackEncoderConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut convs = Vec::with_capacity(cfg.layers);
        let mut c_prev = cfg.input_width();
        for (l, &c) in cfg.channels.iter().enumerate() {
            let fan_in = cfg.kernel_length * c_prev;
            let w = he_normal(vec![cfg.kernel_length, c_prev, c], fan_in, rng);
            let wid = store.add(format!("{prefix}.conv{l}.w"), w)?;
            let bid = store.add(format!("{prefix}.conv{l}.b"), Tensor::zeros(vec![c]))?;
            convs.push((wid, bid));
            c_prev = c;
        }
        let k = cfg.num_classes;
        let w = xavier_uniform(vec![c_prev, k], c_prev, k, rng);
        let head_w = store.add(format!("{prefix}.head.w"), w)?;
        let head_b = store.add(format!("{prefix}.head.b"), Tensor::zeros(vec![k]))?;
        Ok(TrackEncoder {
            cfg: cfg.clone(),
            convs,
            head: (head_w, head_b),
        })
    }

    pub fn config(&self) -> &TrackEncoderConfig {
        &self.cfg
    }

    /// Runs the encoder over a `T x 4D` object tensor. Every layer output
    /// keeps temporal length `T`; logits come from a global average over time
    /// followed by the linear head.
    pub fn forward<F: Real>(
        &self,
        sess: &mut Session<F>,
        z: &ObjectTensor<F>,
    ) -> tensor_core::Result<TrackFeatures> {
        let zref = sess.input(&z.values);
        self.forward_ref(sess, zref)
    }

    /// Same as [`TrackEncoder::forward`] for a value already on the tape.
    pub fn forward_ref<F: Real>(
        &self,
        sess: &mut Session<F>,
        zref: TensorRef,
    ) -> tensor_core::Result<TrackFeatures> {
        let mut layers = Vec::with_capacity(self.cfg.layers);
        let mut x = zref;
        for &(w, b) in &self.convs {
            let wref = sess.param(w);
            let bref = sess.param(b);
            let conv = sess.tape.conv_temporal(x, wref, bref)?;
            let c = *sess.tape.value(conv).shape().last().unwrap();
            let gain = sess.tape.constant(Tensor::full(vec![c], F::one()));
            let bias = sess.tape.constant(Tensor::zeros(vec![c]));
            let normed = sess.tape.layer_norm(conv, 1, gain, bias, 1e-5)?;
            x = sess.tape.relu(normed)?;
            layers.push(x);
        }
        let pooled = sess.tape.global_avg(x)?;
        let hw = sess.param(self.head.0);
        let hb = sess.param(self.head.1);
        let c_last = *self.cfg.channels.last().unwrap();
        let row = sess.tape.reshape(pooled, vec![1, c_last])?;
        let prod = sess.tape.matmul(row, hw)?;
        let biased = sess.tape.add_bias(prod, hb)?;
        let logits = sess.tape.reshape(biased, vec![self.cfg.num_classes])?;
        Ok(TrackFeatures {
            layers,
            pooled,
            logits,
        })
    }
}
