use crate::config::PathwayConfig;
use crate::error::Result;
use mgaf::{mgaf_forward_diag, MgafDiagnostics, MgafWeights};
use tensor_core::seed::ChaCha8Rng;
use tensor_core::{he_normal, ParamId, ParamStore, Real, Session, Tensor, TensorRef};

const LN_EPS: f64 = 1e-5;

/// Affine layer-norm parameters over a channel width.
pub struct NormParams {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl NormParams {
    fn init<F: Real>(store: &mut ParamStore<F>, prefix: &str, c: usize) -> Result<Self> {
        let gain = store.add(format!("{prefix}.ln.gain"), Tensor::full(vec![c], F::one()))?;
        let bias = store.add(format!("{prefix}.ln.bias"), Tensor::zeros(vec![c]))?;
        Ok(NormParams { gain, bias })
    }

    /// Channel-wise layer-norm (last axis) followed by ReLU — the sigma of
    /// the residual blocks.
    pub fn normalize_relu<F: Real>(
        &self,
        sess: &mut Session<F>,
        x: TensorRef,
    ) -> tensor_core::Result<TensorRef> {
        let gain = sess.param(self.gain);
        let bias = sess.param(self.bias);
        let axis = sess.tape.value(x).rank() - 1;
        let normed = sess.tape.layer_norm(x, axis, gain, bias, LN_EPS)?;
        sess.tape.relu(normed)
    }
}

/// One residual block: a temporal `t x 1 x 1` convolution, then a spatial
/// `1 x k x k` convolution, each followed by layer-norm + ReLU, with an
/// identity shortcut. A fusion site, when present, gates the temporal
/// feature before the spatial convolution.
pub struct BlockParams {
    pub temporal_w: ParamId,
    pub temporal_b: ParamId,
    pub temporal_norm: NormParams,
    pub spatial_w: ParamId,
    pub spatial_b: ParamId,
    pub spatial_norm: NormParams,
    pub fusion: Option<MgafWeights>,
}

impl BlockParams {
    pub fn init<F: Real>(
        store: &mut ParamStore<F>,
        prefix: &str,
        channels: usize,
        temporal_kernel: usize,
        spatial_kernel: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let t = temporal_kernel;
        let k = spatial_kernel;
        let temporal_w = store.add(
            format!("{prefix}.temporal.w"),
            he_normal(vec![t, channels, channels], t * channels, rng),
        )?;
        let temporal_b = store.add(
            format!("{prefix}.temporal.b"),
            Tensor::zeros(vec![channels]),
        )?;
        let temporal_norm = NormParams::init(store, &format!("{prefix}.temporal"), channels)?;
        let spatial_w = store.add(
            format!("{prefix}.spatial.w"),
            he_normal(vec![k, k, channels, channels], k * k * channels, rng),
        )?;
        let spatial_b = store.add(
            format!("{prefix}.spatial.b"),
            Tensor::zeros(vec![channels]),
        )?;
        let spatial_norm = NormParams::init(store, &format!("{prefix}.spatial"), channels)?;
        Ok(BlockParams {
            temporal_w,
            temporal_b,
            temporal_norm,
            spatial_w,
            spatial_b,
            spatial_norm,
            fusion: None,
        })
    }

    /// Parameter count of the block without its fusion site.
    pub fn body_count(channels: usize, temporal_kernel: usize, spatial_kernel: usize) -> usize {
        let conv_t = temporal_kernel * channels * channels + channels;
        let conv_s = spatial_kernel * spatial_kernel * channels * channels + channels;
        conv_t + conv_s + 4 * channels // two affine norms
    }
}

/// Runs one block. `object_feature` must be present iff the block hosts a
/// fusion site. Returns the output (same shape as the input) and the site's
/// diagnostics when fused.
pub fn block_forward<F: Real>(
    sess: &mut Session<F>,
    block: &BlockParams,
    x: TensorRef,
    object_feature: Option<TensorRef>,
) -> Result<(TensorRef, Option<MgafDiagnostics>)> {
    let tw = sess.param(block.temporal_w);
    let tb = sess.param(block.temporal_b);
    let conv_t = sess.tape.conv_temporal(x, tw, tb)?;
    let mut f = block.temporal_norm.normalize_relu(sess, conv_t)?;

    let mut diag = None;
    if let Some(w) = &block.fusion {
        let u = object_feature.expect("fusion site without object feature");
        let (fused, d) = mgaf_forward_diag(sess, f, u, w)?;
        f = fused;
        diag = Some(d);
    }

    let sw = sess.param(block.spatial_w);
    let sb = sess.param(block.spatial_b);
    let conv_s = sess.tape.conv_spatial(f, sw, sb, 1)?;
    let g = block.spatial_norm.normalize_relu(sess, conv_s)?;
    let out = sess.tape.add(x, g)?;
    Ok((out, diag))
}

/// Stage entry: spatial convolution (optionally strided for downsampling)
/// mapping the incoming channels (plus any lateral channels) to the stage
/// width, followed by layer-norm + ReLU.
pub struct StageParams {
    pub entry_w: ParamId,
    pub entry_b: ParamId,
    pub entry_norm: NormParams,
    pub stride: usize,
    pub blocks: Vec<BlockParams>,
}

impl StageParams {
    #[allow(clippy::too_many_arguments)]
    pub fn init<F: Real>(
        store: &mut ParamStore<F>,
        prefix: &str,
        in_channels: usize,
        width: usize,
        stride: usize,
        cfg: &PathwayConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let k = cfg.spatial_kernel;
        let entry_w = store.add(
            format!("{prefix}.entry.w"),
            he_normal(vec![k, k, in_channels, width], k * k * in_channels, rng),
        )?;
        let entry_b = store.add(format!("{prefix}.entry.b"), Tensor::zeros(vec![width]))?;
        let entry_norm = NormParams::init(store, &format!("{prefix}.entry"), width)?;
        let mut blocks = Vec::with_capacity(cfg.blocks_per_stage);
        for b in 0..cfg.blocks_per_stage {
            blocks.push(BlockParams::init(
                store,
                &format!("{prefix}.block{b}"),
                width,
                cfg.temporal_kernel,
                cfg.spatial_kernel,
                rng,
            )?);
        }
        Ok(StageParams {
            entry_w,
            entry_b,
            entry_norm,
            stride,
            blocks,
        })
    }
}

/// One pathway: a stack of stages.
pub struct PathwayParams {
    pub stages: Vec<StageParams>,
    pub widths: Vec<usize>,
}

/// Output of a pathway pass.
pub struct PathwayOutputs {
    /// Values entering each stage (the raw input, then each stage's output
    /// except the last). These feed the lateral connections.
    pub stage_inputs: Vec<TensorRef>,
    /// Final feature map.
    pub features: TensorRef,
    /// Globally pooled feature vector.
    pub pooled: TensorRef,
    pub diagnostics: Vec<MgafDiagnostics>,
}

/// Runs a pathway. `laterals[i]`, when given, is concatenated channel-wise
/// onto stage `i`'s input. `object_features[j]` supplies the fusion input of
/// global block `j` (1-based) for blocks that host a site.
pub fn pathway_forward<F: Real>(
    sess: &mut Session<F>,
    params: &PathwayParams,
    input: TensorRef,
    laterals: Option<&[TensorRef]>,
    object_features: Option<&[Option<TensorRef>]>,
) -> Result<PathwayOutputs> {
    let mut x = input;
    let mut stage_inputs = Vec::with_capacity(params.stages.len());
    let mut diagnostics = Vec::new();
    let mut block_index = 0usize;
    for (s, stage) in params.stages.iter().enumerate() {
        stage_inputs.push(x);
        if let Some(lats) = laterals {
            x = sess.tape.concat_channels(&[x, lats[s]])?;
        }
        let ew = sess.param(stage.entry_w);
        let eb = sess.param(stage.entry_b);
        let entry = sess.tape.conv_spatial(x, ew, eb, stage.stride)?;
        x = stage.entry_norm.normalize_relu(sess, entry)?;
        for block in &stage.blocks {
            block_index += 1;
            let feat = object_features
                .and_then(|feats| feats.get(block_index - 1))
                .copied()
                .flatten();
            let (out, diag) = block_forward(sess, block, x, feat)?;
            x = out;
            if let Some(d) = diag {
                diagnostics.push(d);
            }
        }
    }
    let pooled = sess.tape.global_avg(x)?;
    Ok(PathwayOutputs {
        stage_inputs,
        features: x,
        pooled,
        diagnostics,
    })
}

/// Time-strided lateral conv-fusion: projects a motion-rate feature to the
/// appearance rate with doubled channels for concatenation.
pub struct LateralParams {
    pub w: ParamId,
    pub b: ParamId,
    pub rate: usize,
}

impl LateralParams {
    pub fn init<F: Real>(
        store: &mut ParamStore<F>,
        prefix: &str,
        in_channels: usize,
        kernel: usize,
        rate: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let out_channels = 2 * in_channels;
        let w = store.add(
            format!("{prefix}.w"),
            he_normal(
                vec![kernel, in_channels, out_channels],
                kernel * in_channels,
                rng,
            ),
        )?;
        let b = store.add(format!("{prefix}.b"), Tensor::zeros(vec![out_channels]))?;
        Ok(LateralParams { w, b, rate })
    }
}

/// Applies the lateral projection; output temporal length is
/// `T_motion / rate` (= T_A).
pub fn lateral_fuse<F: Real>(
    sess: &mut Session<F>,
    lateral: &LateralParams,
    motion_feature: TensorRef,
) -> tensor_core::Result<TensorRef> {
    let w = sess.param(lateral.w);
    let b = sess.param(lateral.b);
    sess.tape
        .conv_temporal_strided(motion_feature, w, b, lateral.rate)
}
