//! Motion-guided attention fusion.
//!
//! A spatially collapsed video feature attends to per-frame object features;
//! the attended signal, after layer-norm, ReLU and a learned projection,
//! becomes a sigmoid gate over the video feature's time and channel
//! dimensions (broadcast across space):
//!
//! ```text
//! z = spatial_mean(f)                           // T x C_M
//! A = softmax((z W_z)(U W_U)^T / sqrt(C)) U W_U // T x C
//! g = sigmoid(relu(layer_norm(A)) W_uz + b_g)   // T x C_M, in (0,1)
//! out = f ⊗ g                                   // gate broadcast over H, W
//! ```
//!
//! Object features of a different temporal length are first resampled to the
//! video feature's length by linear interpolation, keeping everything
//! differentiable.

use tensor_core::seed::ChaCha8Rng;
use tensor_core::{
    xavier_uniform, ParamId, ParamStore, Real, Result, Session, Tensor, TensorError, TensorRef,
};

/// Widths of one fusion site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MgafConfig {
    /// Channel width `C_M` of the hosting video feature.
    pub feature_channels: usize,
    /// Width `C_U` of the incoming object feature.
    pub object_channels: usize,
    /// Attention width `C`. Defaults to `min(C_M, C_U)` when unset upstream.
    pub attention_width: usize,
}

impl MgafConfig {
    pub fn with_default_width(feature_channels: usize, object_channels: usize) -> Self {
        MgafConfig {
            feature_channels,
            object_channels,
            attention_width: feature_channels.min(object_channels),
        }
    }

    /// Parameter count of one site: `W_z`, `W_U`, `W_uz`, the layer-norm
    /// affine pair over `C`, and the gate bias over `C_M`.
    pub fn parameter_count(&self) -> usize {
        let c = self.attention_width;
        self.feature_channels * c
            + self.object_channels * c
            + c * self.feature_channels
            + 2 * c
            + self.feature_channels
    }
}

/// Learnable parameters of one fusion site.
pub struct MgafWeights {
    pub cfg: MgafConfig,
    pub w_z: ParamId,
    pub w_u: ParamId,
    pub w_uz: ParamId,
    pub ln_gain: ParamId,
    pub ln_bias: ParamId,
    pub gate_bias: ParamId,
}

/// Per-forward diagnostics of one site.
#[derive(Clone, Copy, Debug, Default)]
pub struct MgafDiagnostics {
    /// Mean gate value over time and channels.
    pub gate_mean: f64,
    /// Mean Shannon entropy (nats) of the attention rows.
    pub attention_entropy: f64,
}

impl MgafWeights {
    pub fn init<F: Real>(
        store: &mut ParamStore<F>,
        prefix: &str,
        cfg: MgafConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let c = cfg.attention_width;
        let cm = cfg.feature_channels;
        let cu = cfg.object_channels;
        let w_z = store.add(
            format!("{prefix}.w_z"),
            xavier_uniform(vec![cm, c], cm, c, rng),
        )?;
        let w_u = store.add(
            format!("{prefix}.w_u"),
            xavier_uniform(vec![cu, c], cu, c, rng),
        )?;
        let w_uz = store.add(
            format!("{prefix}.w_uz"),
            xavier_uniform(vec![c, cm], c, cm, rng),
        )?;
        let ln_gain = store.add(format!("{prefix}.ln.gain"), Tensor::full(vec![c], F::one()))?;
        let ln_bias = store.add(format!("{prefix}.ln.bias"), Tensor::zeros(vec![c]))?;
        let gate_bias = store.add(format!("{prefix}.gate.bias"), Tensor::zeros(vec![cm]))?;
        Ok(MgafWeights {
            cfg,
            w_z,
            w_u,
            w_uz,
            ln_gain,
            ln_bias,
            gate_bias,
        })
    }

}

/// Full-window spatial average: `T x H x W x C_M -> T x C_M`.
pub fn spatial_collapse<F: Real>(sess: &mut Session<F>, f: TensorRef) -> Result<TensorRef> {
    sess.tape.spatial_avg(f)
}

/// Cross-modal attention: each row of the output is a convex combination of
/// the rows of `U W_U`, weighted by softmax over the key axis of the scaled
/// scores `(z W_z)(U W_U)^T / sqrt(C)`.
pub fn attend<F: Real>(
    sess: &mut Session<F>,
    z: TensorRef,
    u: TensorRef,
    w: &MgafWeights,
) -> Result<TensorRef> {
    let (a, _entropy) = attend_with_entropy(sess, z, u, w)?;
    Ok(a)
}

fn attend_with_entropy<F: Real>(
    sess: &mut Session<F>,
    z: TensorRef,
    u: TensorRef,
    w: &MgafWeights,
) -> Result<(TensorRef, f64)> {
    let zs = sess.tape.value(z).shape().to_vec();
    let us = sess.tape.value(u).shape().to_vec();
    if zs.len() != 2 || zs[1] != w.cfg.feature_channels {
        return Err(TensorError::ShapeMismatch {
            op: "mgaf_attend",
            lhs: zs,
            rhs: vec![w.cfg.feature_channels],
        });
    }
    if us.len() != 2 || us[1] != w.cfg.object_channels {
        return Err(TensorError::ShapeMismatch {
            op: "mgaf_attend",
            lhs: us,
            rhs: vec![w.cfg.object_channels],
        });
    }
    let w_z = sess.param(w.w_z);
    let w_u = sess.param(w.w_u);
    let queries = sess.tape.matmul(z, w_z)?; // T x C
    let keys = sess.tape.matmul(u, w_u)?; // T_U x C
    let scores = sess.tape.matmul_bt(queries, keys)?; // T x T_U
    let scale = 1.0 / (w.cfg.attention_width as f64).sqrt();
    let scaled = sess.tape.scale(scores, F::from_f64(scale))?;
    let attn = sess.tape.softmax(scaled, 1)?;
    let entropy = row_entropy(sess.tape.value(attn).data(), us[0]);
    let a = sess.tape.matmul(attn, keys)?; // T x C
    Ok((a, entropy))
}

fn row_entropy<F: Real>(attn: &[F], row_len: usize) -> f64 {
    let rows = attn.len() / row_len;
    let mut total = 0.0;
    for r in 0..rows {
        for &p in &attn[r * row_len..(r + 1) * row_len] {
            let p = p.to_double();
            if p > 0.0 {
                total -= p * p.ln();
            }
        }
    }
    total / rows as f64
}

/// Gates `f` with the attention-derived signal; output shape equals `f`'s.
pub fn mgaf_forward<F: Real>(
    sess: &mut Session<F>,
    f: TensorRef,
    u: TensorRef,
    w: &MgafWeights,
) -> Result<TensorRef> {
    let (out, _diag) = mgaf_forward_diag(sess, f, u, w)?;
    Ok(out)
}

/// As [`mgaf_forward`], also reporting gate/attention diagnostics.
pub fn mgaf_forward_diag<F: Real>(
    sess: &mut Session<F>,
    f: TensorRef,
    u: TensorRef,
    w: &MgafWeights,
) -> Result<(TensorRef, MgafDiagnostics)> {
    let fs = sess.tape.value(f).shape().to_vec();
    if fs.len() != 4 || fs[3] != w.cfg.feature_channels {
        return Err(TensorError::ShapeMismatch {
            op: "mgaf_forward",
            lhs: fs,
            rhs: vec![w.cfg.feature_channels],
        });
    }
    let t = fs[0];
    // Align object features to the video feature's temporal length.
    let u_aligned = sess.tape.time_interp(u, t)?;

    let z = spatial_collapse(sess, f)?;
    let (a, attention_entropy) = attend_with_entropy(sess, z, u_aligned, w)?;

    let gain = sess.param(w.ln_gain);
    let bias = sess.param(w.ln_bias);
    let normed = sess.tape.layer_norm(a, 1, gain, bias, 1e-5)?;
    let activated = sess.tape.relu(normed)?;
    let w_uz = sess.param(w.w_uz);
    let pre = sess.tape.matmul(activated, w_uz)?; // T x C_M
    let gb = sess.param(w.gate_bias);
    let pre = sess.tape.add_bias(pre, gb)?;
    let gate = sess.tape.sigmoid(pre)?;

    let gd = sess.tape.value(gate).data();
    let gate_mean = gd.iter().map(|v| v.to_double()).sum::<f64>() / gd.len() as f64;

    let out = sess.tape.gate_mul(f, gate)?;
    Ok((
        out,
        MgafDiagnostics {
            gate_mean,
            attention_entropy,
        },
    ))
}
