use crate::error::{Result, TensorError};
use crate::gemm::{gemm, gemm_a_bt, gemm_at_b};
use crate::real::Real;
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorRef(pub(crate) usize);

/// Verification mode scans every op output for NaN/Inf and fails naming the
/// op; fast mode skips the scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseFn {
    Relu,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    /// `T×H×W×C -> T×C`, averaging over the full spatial window.
    SpatialAvg,
    /// `…×C -> C`, averaging over all leading axes.
    GlobalAvg,
}

#[derive(Debug)]
enum Op<F: Real> {
    Leaf,
    Add(TensorRef, TensorRef),
    Mul(TensorRef, TensorRef),
    Scale(TensorRef, F),
    AddBias {
        x: TensorRef,
        bias: TensorRef,
    },
    Matmul(TensorRef, TensorRef),
    /// `a · bᵀ` with `a: m×k`, `b: n×k`.
    MatmulBt(TensorRef, TensorRef),
    Softmax {
        x: TensorRef,
        axis: usize,
    },
    ConvTemporal {
        x: TensorRef,
        w: TensorRef,
        bias: TensorRef,
        stride: usize,
    },
    ConvSpatial {
        x: TensorRef,
        w: TensorRef,
        bias: TensorRef,
        stride: usize,
    },
    Pointwise {
        x: TensorRef,
        f: PointwiseFn,
    },
    LayerNorm {
        x: TensorRef,
        gain: TensorRef,
        bias: TensorRef,
        axis: usize,
        eps: f64,
    },
    Pool {
        x: TensorRef,
        kind: PoolKind,
    },
    CrossEntropy {
        logits: TensorRef,
        labels: Vec<usize>,
    },
    ConcatChannels(Vec<TensorRef>),
    GateMul {
        x: TensorRef,
        gate: TensorRef,
    },
    TimeInterp {
        x: TensorRef,
    },
    Reshape(TensorRef),
    Sum(TensorRef),
}

struct Node<F: Real> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
}

/// Define-by-run tape: ops append nodes during the forward pass; `backward`
/// replays adjoints in exact reverse execution order, accumulating gradients
/// additively whenever a value feeds multiple consumers.
pub struct Tape<F: Real> {
    nodes: Vec<Node<F>>,
    grads: Vec<Option<Vec<F>>>,
    mode: Mode,
}

impl<F: Real> Tape<F> {
    pub fn new(mode: Mode) -> Self {
        Tape {
            nodes: Vec::new(),
            grads: Vec::new(),
            mode,
        }
    }

    pub fn verify() -> Self {
        Tape::new(Mode::Verify)
    }

    pub fn fast() -> Self {
        Tape::new(Mode::Fast)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records an input value. Gradient tracking follows the tensor's own
    /// `requires_grad` flag.
    pub fn leaf(&mut self, t: &Tensor<F>) -> TensorRef {
        let rg = t.requires_grad();
        self.push_unchecked(t.clone(), rg, Op::Leaf)
    }

    /// Records a constant input that never receives gradients.
    pub fn constant(&mut self, t: Tensor<F>) -> TensorRef {
        self.push_unchecked(t, false, Op::Leaf)
    }

    pub fn value(&self, r: TensorRef) -> &Tensor<F> {
        &self.nodes[r.0].value
    }

    /// Gradient of the last `backward` call with respect to `r`, if any flowed.
    pub fn grad(&self, r: TensorRef) -> Option<&[F]> {
        self.grads.get(r.0).and_then(|g| g.as_deref())
    }

    fn push_unchecked(&mut self, value: Tensor<F>, requires_grad: bool, op: Op<F>) -> TensorRef {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        TensorRef(self.nodes.len() - 1)
    }

    fn push(
        &mut self,
        opname: &'static str,
        value: Tensor<F>,
        requires_grad: bool,
        op: Op<F>,
    ) -> Result<TensorRef> {
        if self.mode == Mode::Verify && !value.all_finite() {
            return Err(TensorError::NonFinite { op: opname });
        }
        Ok(self.push_unchecked(value, requires_grad, op))
    }

    fn rg(&self, r: TensorRef) -> bool {
        self.nodes[r.0].requires_grad
    }

    // ── elementwise and linear ops ──────────────────────────────────────

    pub fn add(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push("add", out, rg, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| x * y)
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push("mul", out, rg, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: TensorRef, c: F) -> Result<TensorRef> {
        let out = self.value(a).map(|v| v * c);
        let rg = self.rg(a);
        self.push("scale", out, rg, Op::Scale(a, c))
    }

    /// `x[..., c] + bias[c]`, bias broadcast over all leading axes.
    pub fn add_bias(&mut self, x: TensorRef, bias: TensorRef) -> Result<TensorRef> {
        let (tx, tb) = (self.value(x), self.value(bias));
        let c = *tx.shape().last().expect("non-empty shape");
        if tb.shape() != [c] {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: tx.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let bdat = tb.data();
        let mut data = tx.data().to_vec();
        for chunk in data.chunks_exact_mut(c) {
            for (v, &b) in chunk.iter_mut().zip(bdat) {
                *v += b;
            }
        }
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(bias);
        self.push("add_bias", out, rg, Op::AddBias { x, bias })
    }

    pub fn matmul(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![F::zero(); m * n];
        gemm(m, k, n, ta.data(), tb.data(), &mut data);
        let out = Tensor::new(vec![m, n], data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul", out, rg, Op::Matmul(a, b))
    }

    /// `a · bᵀ` with `a: m×k`, `b: n×k` -> `m×n`.
    pub fn matmul_bt(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[1] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul_bt",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[0]);
        let mut data = vec![F::zero(); m * n];
        gemm_a_bt(m, k, n, ta.data(), tb.data(), &mut data);
        let out = Tensor::new(vec![m, n], data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul_bt", out, rg, Op::MatmulBt(a, b))
    }

    pub fn reshape(&mut self, x: TensorRef, shape: Vec<usize>) -> Result<TensorRef> {
        let out = self.value(x).reshaped(shape)?;
        let rg = self.rg(x);
        self.push("reshape", out, rg, Op::Reshape(x))
    }

    pub fn sum(&mut self, x: TensorRef) -> Result<TensorRef> {
        let mut acc = F::zero();
        for &v in self.value(x).data() {
            acc += v;
        }
        let rg = self.rg(x);
        self.push("sum", Tensor::scalar(acc), rg, Op::Sum(x))
    }

    // ── nonlinearities and normalization ────────────────────────────────

    pub fn pointwise(&mut self, x: TensorRef, f: PointwiseFn) -> Result<TensorRef> {
        let out = match f {
            PointwiseFn::Relu => self
                .value(x)
                .map(|v| if v > F::zero() { v } else { F::zero() }),
            PointwiseFn::Sigmoid => self
                .value(x)
                .map(|v| F::one() / (F::one() + (-v).exp())),
        };
        let name = match f {
            PointwiseFn::Relu => "relu",
            PointwiseFn::Sigmoid => "sigmoid",
        };
        let rg = self.rg(x);
        self.push(name, out, rg, Op::Pointwise { x, f })
    }

    pub fn relu(&mut self, x: TensorRef) -> Result<TensorRef> {
        self.pointwise(x, PointwiseFn::Relu)
    }

    pub fn sigmoid(&mut self, x: TensorRef) -> Result<TensorRef> {
        self.pointwise(x, PointwiseFn::Sigmoid)
    }

    /// Max-shifted softmax along `axis`; every slice sums to one.
    pub fn softmax(&mut self, x: TensorRef, axis: usize) -> Result<TensorRef> {
        let tx = self.value(x);
        let rank = tx.rank();
        if axis >= rank {
            return Err(TensorError::InvalidAxis {
                op: "softmax",
                axis,
                rank,
            });
        }
        let (outer, len, inner) = split_axis(tx.shape(), axis);
        let mut data = tx.data().to_vec();
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut mx = F::neg_infinity();
                for j in 0..len {
                    mx = mx.max(data[base + j * inner]);
                }
                let mut sum = F::zero();
                for j in 0..len {
                    let e = (data[base + j * inner] - mx).exp();
                    data[base + j * inner] = e;
                    sum += e;
                }
                for j in 0..len {
                    data[base + j * inner] /= sum;
                }
            }
        }
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x);
        self.push("softmax", out, rg, Op::Softmax { x, axis })
    }

    /// Per-slice zero-mean unit-variance (population statistics) along `axis`,
    /// then the affine map `gain * xhat + bias`.
    pub fn layer_norm(
        &mut self,
        x: TensorRef,
        axis: usize,
        gain: TensorRef,
        bias: TensorRef,
        eps: f64,
    ) -> Result<TensorRef> {
        let tx = self.value(x);
        let rank = tx.rank();
        if axis >= rank {
            return Err(TensorError::InvalidAxis {
                op: "layer_norm",
                axis,
                rank,
            });
        }
        let len = tx.shape()[axis];
        for (r, nm) in [(gain, "gain"), (bias, "bias")] {
            let s = self.value(r).shape();
            if s != [len] {
                let _ = nm;
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    lhs: vec![len],
                    rhs: s.to_vec(),
                });
            }
        }
        let (outer, _, inner) = split_axis(tx.shape(), axis);
        let epsf = F::from_f64(eps);
        let g = self.value(gain).data().to_vec();
        let b = self.value(bias).data().to_vec();
        let tx = self.value(x);
        let xd = tx.data();
        let mut data = vec![F::zero(); xd.len()];
        let lenf = F::from_f64(len as f64);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut mean = F::zero();
                for j in 0..len {
                    mean += xd[base + j * inner];
                }
                mean /= lenf;
                let mut var = F::zero();
                for j in 0..len {
                    let d = xd[base + j * inner] - mean;
                    var += d * d;
                }
                var /= lenf;
                let denom = (var + epsf).sqrt();
                for j in 0..len {
                    let xhat = (xd[base + j * inner] - mean) / denom;
                    data[base + j * inner] = g[j] * xhat + b[j];
                }
            }
        }
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(gain) || self.rg(bias);
        self.push(
            "layer_norm",
            out,
            rg,
            Op::LayerNorm {
                x,
                gain,
                bias,
                axis,
                eps,
            },
        )
    }

    // ── convolutions ────────────────────────────────────────────────────

    /// Stride-1 temporal convolution with symmetric zero padding; preserves
    /// the time extent exactly. Accepts `T×C` or `T×H×W×C` (the kernel is
    /// `t×1×1` over folded spatial dims in the 4-D case).
    pub fn conv_temporal(
        &mut self,
        x: TensorRef,
        w: TensorRef,
        bias: TensorRef,
    ) -> Result<TensorRef> {
        self.conv_temporal_strided(x, w, bias, 1)
    }

    /// Time-strided variant used by the lateral conv-fusion connections;
    /// output length is `ceil(T / stride)`.
    pub fn conv_temporal_strided(
        &mut self,
        x: TensorRef,
        w: TensorRef,
        bias: TensorRef,
        stride: usize,
    ) -> Result<TensorRef> {
        if stride == 0 {
            return Err(TensorError::InvalidStride {
                op: "conv_temporal",
                stride,
            });
        }
        let tx = self.value(x);
        let tw = self.value(w);
        let xs = tx.shape().to_vec();
        let ws = tw.shape().to_vec();
        if ws.len() != 3 {
            return Err(TensorError::RankMismatch {
                op: "conv_temporal",
                expected: 3,
                shape: ws,
            });
        }
        let (klen, cin, cout) = (ws[0], ws[1], ws[2]);
        if klen % 2 == 0 {
            return Err(TensorError::EvenKernel {
                op: "conv_temporal",
                len: klen,
            });
        }
        if xs.len() != 2 && xs.len() != 4 {
            return Err(TensorError::RankMismatch {
                op: "conv_temporal",
                expected: 2,
                shape: xs,
            });
        }
        let t = xs[0];
        let spatial: usize = xs[1..xs.len() - 1].iter().product();
        let cx = *xs.last().unwrap();
        if cx != cin {
            return Err(TensorError::ShapeMismatch {
                op: "conv_temporal",
                lhs: xs,
                rhs: ws,
            });
        }
        if self.value(bias).shape() != [cout] {
            return Err(TensorError::ShapeMismatch {
                op: "conv_temporal",
                lhs: vec![cout],
                rhs: self.value(bias).shape().to_vec(),
            });
        }
        let t_out = t.div_ceil(stride);
        let pad = (klen - 1) / 2;

        let patches = im2col_temporal(tx.data(), t, spatial, cin, klen, stride, pad);
        let rows = t_out * spatial;
        let mut data = vec![F::zero(); rows * cout];
        gemm(rows, klen * cin, cout, &patches, self.value(w).data(), &mut data);
        let bdat = self.value(bias).data();
        for chunk in data.chunks_exact_mut(cout) {
            for (v, &b) in chunk.iter_mut().zip(bdat) {
                *v += b;
            }
        }
        let mut out_shape = self.value(x).shape().to_vec();
        out_shape[0] = t_out;
        *out_shape.last_mut().unwrap() = cout;
        let out = Tensor::new(out_shape, data)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(bias);
        self.push(
            "conv_temporal",
            out,
            rg,
            Op::ConvTemporal { x, w, bias, stride },
        )
    }

    /// Per-frame spatial convolution (`1×k×k` kernels), same padding, stride
    /// 1 or 2; the time axis is untouched.
    pub fn conv_spatial(
        &mut self,
        x: TensorRef,
        w: TensorRef,
        bias: TensorRef,
        stride: usize,
    ) -> Result<TensorRef> {
        if stride == 0 {
            return Err(TensorError::InvalidStride {
                op: "conv_spatial",
                stride,
            });
        }
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        if xs.len() != 4 {
            return Err(TensorError::RankMismatch {
                op: "conv_spatial",
                expected: 4,
                shape: xs,
            });
        }
        if ws.len() != 4 || ws[0] != ws[1] {
            return Err(TensorError::RankMismatch {
                op: "conv_spatial",
                expected: 4,
                shape: ws,
            });
        }
        let (k, cin, cout) = (ws[0], ws[2], ws[3]);
        if k % 2 == 0 {
            return Err(TensorError::EvenKernel {
                op: "conv_spatial",
                len: k,
            });
        }
        let (t, h, wd, cx) = (xs[0], xs[1], xs[2], xs[3]);
        if cx != cin {
            return Err(TensorError::ShapeMismatch {
                op: "conv_spatial",
                lhs: xs,
                rhs: ws,
            });
        }
        let pad = (k - 1) / 2;
        if k > h + 2 * pad || k > wd + 2 * pad {
            return Err(TensorError::KernelTooLarge {
                op: "conv_spatial",
                kernel: k,
                extent: h.min(wd) + 2 * pad,
            });
        }
        if self.value(bias).shape() != [cout] {
            return Err(TensorError::ShapeMismatch {
                op: "conv_spatial",
                lhs: vec![cout],
                rhs: self.value(bias).shape().to_vec(),
            });
        }
        let h_out = h.div_ceil(stride);
        let w_out = wd.div_ceil(stride);

        let patches = im2col_spatial(self.value(x).data(), t, h, wd, cin, k, stride, pad);
        let rows = t * h_out * w_out;
        let mut data = vec![F::zero(); rows * cout];
        gemm(rows, k * k * cin, cout, &patches, self.value(w).data(), &mut data);
        let bdat = self.value(bias).data();
        for chunk in data.chunks_exact_mut(cout) {
            for (v, &b) in chunk.iter_mut().zip(bdat) {
                *v += b;
            }
        }
        let out = Tensor::new(vec![t, h_out, w_out, cout], data)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(bias);
        self.push(
            "conv_spatial",
            out,
            rg,
            Op::ConvSpatial { x, w, bias, stride },
        )
    }

    // ── pooling, fusion, losses ─────────────────────────────────────────

    /// Average pooling. `window`, when given, must equal the full spatial
    /// extent being collapsed.
    pub fn pool(
        &mut self,
        x: TensorRef,
        kind: PoolKind,
        window: Option<(usize, usize)>,
    ) -> Result<TensorRef> {
        let tx = self.value(x);
        let xs = tx.shape().to_vec();
        match kind {
            PoolKind::SpatialAvg => {
                if xs.len() != 4 {
                    return Err(TensorError::RankMismatch {
                        op: "pool",
                        expected: 4,
                        shape: xs,
                    });
                }
                let (t, h, w, c) = (xs[0], xs[1], xs[2], xs[3]);
                if let Some(win) = window {
                    if win != (h, w) {
                        return Err(TensorError::WindowMismatch {
                            op: "pool",
                            window: win,
                            extent: (h, w),
                        });
                    }
                }
                let area = F::from_f64((h * w) as f64);
                let xd = tx.data();
                let mut data = vec![F::zero(); t * c];
                for ti in 0..t {
                    let frame = &xd[ti * h * w * c..(ti + 1) * h * w * c];
                    let orow = &mut data[ti * c..(ti + 1) * c];
                    for px in frame.chunks_exact(c) {
                        for (o, &v) in orow.iter_mut().zip(px) {
                            *o += v;
                        }
                    }
                    for o in orow.iter_mut() {
                        *o /= area;
                    }
                }
                let out = Tensor::new(vec![t, c], data)?;
                let rg = self.rg(x);
                self.push("pool", out, rg, Op::Pool { x, kind })
            }
            PoolKind::GlobalAvg => {
                let c = *xs.last().unwrap();
                let lead = tx.numel() / c;
                if let Some(win) = window {
                    if win != (lead, 1) {
                        return Err(TensorError::WindowMismatch {
                            op: "pool",
                            window: win,
                            extent: (lead, 1),
                        });
                    }
                }
                let nf = F::from_f64(lead as f64);
                let mut data = vec![F::zero(); c];
                for chunk in tx.data().chunks_exact(c) {
                    for (o, &v) in data.iter_mut().zip(chunk) {
                        *o += v;
                    }
                }
                for o in data.iter_mut() {
                    *o /= nf;
                }
                let out = Tensor::new(vec![c], data)?;
                let rg = self.rg(x);
                self.push("pool", out, rg, Op::Pool { x, kind })
            }
        }
    }

    pub fn spatial_avg(&mut self, x: TensorRef) -> Result<TensorRef> {
        self.pool(x, PoolKind::SpatialAvg, None)
    }

    pub fn global_avg(&mut self, x: TensorRef) -> Result<TensorRef> {
        self.pool(x, PoolKind::GlobalAvg, None)
    }

    /// Concatenates along the channel (last) axis; all leading axes must match.
    pub fn concat_channels(&mut self, parts: &[TensorRef]) -> Result<TensorRef> {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let lead: Vec<usize> = {
            let s = self.value(parts[0]).shape();
            s[..s.len() - 1].to_vec()
        };
        let mut c_total = 0;
        for &p in parts {
            let s = self.value(p).shape();
            if s[..s.len() - 1] != lead[..] {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_channels",
                    lhs: self.value(parts[0]).shape().to_vec(),
                    rhs: s.to_vec(),
                });
            }
            c_total += *s.last().unwrap();
        }
        let rows: usize = lead.iter().product();
        let mut data = vec![F::zero(); rows * c_total];
        let mut offset = 0;
        for &p in parts {
            let tp = self.value(p);
            let c = *tp.shape().last().unwrap();
            for (r, chunk) in tp.data().chunks_exact(c).enumerate() {
                data[r * c_total + offset..r * c_total + offset + c].copy_from_slice(chunk);
            }
            offset += c;
        }
        let mut shape = lead;
        shape.push(c_total);
        let out = Tensor::new(shape, data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(
            "concat_channels",
            out,
            rg,
            Op::ConcatChannels(parts.to_vec()),
        )
    }

    /// `out[t,h,w,c] = x[t,h,w,c] * gate[t,c]` — the per-time, per-channel
    /// gate is broadcast over all spatial positions.
    pub fn gate_mul(&mut self, x: TensorRef, gate: TensorRef) -> Result<TensorRef> {
        let xs = self.value(x).shape().to_vec();
        let gs = self.value(gate).shape().to_vec();
        if xs.len() != 4 || gs.len() != 2 || gs[0] != xs[0] || gs[1] != xs[3] {
            return Err(TensorError::ShapeMismatch {
                op: "gate_mul",
                lhs: xs,
                rhs: gs,
            });
        }
        let (t, h, w, c) = (xs[0], xs[1], xs[2], xs[3]);
        let xd = self.value(x).data();
        let gd = self.value(gate).data();
        let mut data = vec![F::zero(); xd.len()];
        for ti in 0..t {
            let grow = &gd[ti * c..(ti + 1) * c];
            let frame = &xd[ti * h * w * c..(ti + 1) * h * w * c];
            let oframe = &mut data[ti * h * w * c..(ti + 1) * h * w * c];
            for (opx, px) in oframe.chunks_exact_mut(c).zip(frame.chunks_exact(c)) {
                for ((o, &v), &g) in opx.iter_mut().zip(px).zip(grow) {
                    *o = v * g;
                }
            }
        }
        let out = Tensor::new(xs, data)?;
        let rg = self.rg(x) || self.rg(gate);
        self.push("gate_mul", out, rg, Op::GateMul { x, gate })
    }

    /// Linear interpolation of a `T_in×C` sequence to `t_out` steps.
    /// Identity when the lengths already match.
    pub fn time_interp(&mut self, x: TensorRef, t_out: usize) -> Result<TensorRef> {
        let xs = self.value(x).shape().to_vec();
        if xs.len() != 2 {
            return Err(TensorError::RankMismatch {
                op: "time_interp",
                expected: 2,
                shape: xs,
            });
        }
        if xs[0] == t_out {
            return Ok(x);
        }
        let (t_in, c) = (xs[0], xs[1]);
        let xd = self.value(x).data();
        let mut data = vec![F::zero(); t_out * c];
        for (i, lo, hi, w) in interp_taps(t_in, t_out) {
            let wl = F::from_f64(1.0 - w);
            let wh = F::from_f64(w);
            for j in 0..c {
                data[i * c + j] = wl * xd[lo * c + j] + wh * xd[hi * c + j];
            }
        }
        let out = Tensor::new(vec![t_out, c], data)?;
        let rg = self.rg(x);
        self.push("time_interp", out, rg, Op::TimeInterp { x })
    }

    /// Mean negative log softmax-probability of the true class.
    /// Accepts `N×K` logits with `N` labels, or a rank-1 `K` vector with one.
    pub fn cross_entropy(&mut self, logits: TensorRef, labels: &[usize]) -> Result<TensorRef> {
        let ts = self.value(logits).shape().to_vec();
        let (n, k) = match ts.len() {
            1 => (1, ts[0]),
            2 => (ts[0], ts[1]),
            _ => {
                return Err(TensorError::RankMismatch {
                    op: "cross_entropy",
                    expected: 2,
                    shape: ts,
                })
            }
        };
        if labels.len() != n {
            return Err(TensorError::LabelCount {
                op: "cross_entropy",
                labels: labels.len(),
                batch: n,
            });
        }
        for &y in labels {
            if y >= k {
                return Err(TensorError::LabelOutOfRange {
                    label: y,
                    classes: k,
                });
            }
        }
        let xd = self.value(logits).data();
        let mut loss = F::zero();
        for (i, &y) in labels.iter().enumerate() {
            let row = &xd[i * k..(i + 1) * k];
            let mx = row.iter().cloned().fold(F::neg_infinity(), F::max);
            let mut denom = F::zero();
            for &v in row {
                denom += (v - mx).exp();
            }
            loss += denom.ln() - (row[y] - mx);
        }
        loss /= F::from_f64(n as f64);
        let rg = self.rg(logits);
        self.push(
            "cross_entropy",
            Tensor::scalar(loss),
            rg,
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
            },
        )
    }

    // ── backward ────────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss. Gradients accumulate into the tape's
    /// per-node buffers (and across repeated calls).
    pub fn backward(&mut self, loss: TensorRef) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(TensorError::NotScalar {
                op: "backward",
                shape: self.value(loss).shape().to_vec(),
            });
        }
        if self.grads.len() < self.nodes.len() {
            self.grads.resize_with(self.nodes.len(), || None);
        }
        let mut grads = std::mem::take(&mut self.grads);
        {
            let nodes = &self.nodes;
            let seed = grads[loss.0].get_or_insert_with(|| vec![F::zero(); 1]);
            seed[0] += F::one();

            for idx in (0..=loss.0).rev() {
                if !nodes[idx].requires_grad {
                    continue;
                }
                let Some(gout) = grads[idx].clone() else {
                    continue;
                };
                backprop_node(nodes, idx, &gout, &mut grads);
            }
        }
        self.grads = grads;
        Ok(())
    }
}

/// Splits a shape at `axis` into (product before, extent, product after).
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Tap positions for linear time interpolation: (out index, lo, hi, weight on hi).
fn interp_taps(t_in: usize, t_out: usize) -> Vec<(usize, usize, usize, f64)> {
    let mut taps = Vec::with_capacity(t_out);
    for i in 0..t_out {
        let pos = if t_out == 1 {
            (t_in as f64 - 1.0) / 2.0
        } else {
            i as f64 * (t_in as f64 - 1.0) / (t_out as f64 - 1.0)
        };
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(t_in - 1);
        taps.push((i, lo, hi, pos - lo as f64));
    }
    taps
}

fn im2col_temporal<F: Real>(
    xd: &[F],
    t: usize,
    spatial: usize,
    cin: usize,
    klen: usize,
    stride: usize,
    pad: usize,
) -> Vec<F> {
    let t_out = t.div_ceil(stride);
    let cols = klen * cin;
    let mut patches = vec![F::zero(); t_out * spatial * cols];
    for to in 0..t_out {
        for dt in 0..klen {
            let src = (to * stride + dt) as isize - pad as isize;
            if src < 0 || src >= t as isize {
                continue;
            }
            let src = src as usize;
            for s in 0..spatial {
                let row = to * spatial + s;
                let dst = row * cols + dt * cin;
                let srcoff = (src * spatial + s) * cin;
                patches[dst..dst + cin].copy_from_slice(&xd[srcoff..srcoff + cin]);
            }
        }
    }
    patches
}

fn col2im_temporal<F: Real>(
    dpatches: &[F],
    dx: &mut [F],
    t: usize,
    spatial: usize,
    cin: usize,
    klen: usize,
    stride: usize,
    pad: usize,
) {
    let t_out = t.div_ceil(stride);
    let cols = klen * cin;
    for to in 0..t_out {
        for dt in 0..klen {
            let src = (to * stride + dt) as isize - pad as isize;
            if src < 0 || src >= t as isize {
                continue;
            }
            let src = src as usize;
            for s in 0..spatial {
                let row = to * spatial + s;
                let from = row * cols + dt * cin;
                let into = (src * spatial + s) * cin;
                for j in 0..cin {
                    dx[into + j] += dpatches[from + j];
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn im2col_spatial<F: Real>(
    xd: &[F],
    t: usize,
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Vec<F> {
    let h_out = h.div_ceil(stride);
    let w_out = w.div_ceil(stride);
    let cols = k * k * cin;
    let mut patches = vec![F::zero(); t * h_out * w_out * cols];
    for ti in 0..t {
        let frame = &xd[ti * h * w * cin..(ti + 1) * h * w * cin];
        for ho in 0..h_out {
            for dy in 0..k {
                let sy = (ho * stride + dy) as isize - pad as isize;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let sy = sy as usize;
                for wo in 0..w_out {
                    let row = (ti * h_out + ho) * w_out + wo;
                    for dx in 0..k {
                        let sx = (wo * stride + dx) as isize - pad as isize;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let sx = sx as usize;
                        let dst = row * cols + (dy * k + dx) * cin;
                        let src = (sy * w + sx) * cin;
                        patches[dst..dst + cin].copy_from_slice(&frame[src..src + cin]);
                    }
                }
            }
        }
    }
    patches
}

#[allow(clippy::too_many_arguments)]
fn col2im_spatial<F: Real>(
    dpatches: &[F],
    dx_frame_major: &mut [F],
    t: usize,
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    stride: usize,
    pad: usize,
) {
    let h_out = h.div_ceil(stride);
    let w_out = w.div_ceil(stride);
    let cols = k * k * cin;
    for ti in 0..t {
        let dframe = &mut dx_frame_major[ti * h * w * cin..(ti + 1) * h * w * cin];
        for ho in 0..h_out {
            for dy in 0..k {
                let sy = (ho * stride + dy) as isize - pad as isize;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                let sy = sy as usize;
                for wo in 0..w_out {
                    let row = (ti * h_out + ho) * w_out + wo;
                    for dxk in 0..k {
                        let sx = (wo * stride + dxk) as isize - pad as isize;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let sx = sx as usize;
                        let from = row * cols + (dy * k + dxk) * cin;
                        let into = (sy * w + sx) * cin;
                        for j in 0..cin {
                            dframe[into + j] += dpatches[from + j];
                        }
                    }
                }
            }
        }
    }
}

fn add_into<F: Real>(grads: &mut [Option<Vec<F>>], idx: usize, numel: usize, add: impl Fn(&mut [F])) {
    let buf = grads[idx].get_or_insert_with(|| vec![F::zero(); numel]);
    add(buf);
}

fn backprop_node<F: Real>(
    nodes: &[Node<F>],
    idx: usize,
    gout: &[F],
    grads: &mut Vec<Option<Vec<F>>>,
) {
    let rg = |r: TensorRef| nodes[r.0].requires_grad;
    let val = |r: TensorRef| &nodes[r.0].value;
    match &nodes[idx].op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            for &r in [a, b] {
                if rg(r) {
                    add_into(grads, r.0, val(r).numel(), |buf| {
                        for (o, &g) in buf.iter_mut().zip(gout) {
                            *o += g;
                        }
                    });
                }
            }
        }
        Op::Mul(a, b) => {
            let (a, b) = (*a, *b);
            if rg(a) {
                let bd = val(b).data();
                add_into(grads, a.0, val(a).numel(), |buf| {
                    for ((o, &g), &bv) in buf.iter_mut().zip(gout).zip(bd) {
                        *o += g * bv;
                    }
                });
            }
            if rg(b) {
                let ad = val(a).data();
                add_into(grads, b.0, val(b).numel(), |buf| {
                    for ((o, &g), &av) in buf.iter_mut().zip(gout).zip(ad) {
                        *o += g * av;
                    }
                });
            }
        }
        Op::Scale(a, c) => {
            if rg(*a) {
                let c = *c;
                add_into(grads, a.0, val(*a).numel(), |buf| {
                    for (o, &g) in buf.iter_mut().zip(gout) {
                        *o += g * c;
                    }
                });
            }
        }
        Op::AddBias { x, bias } => {
            if rg(*x) {
                add_into(grads, x.0, val(*x).numel(), |buf| {
                    for (o, &g) in buf.iter_mut().zip(gout) {
                        *o += g;
                    }
                });
            }
            if rg(*bias) {
                let c = val(*bias).numel();
                add_into(grads, bias.0, c, |buf| {
                    for chunk in gout.chunks_exact(c) {
                        for (o, &g) in buf.iter_mut().zip(chunk) {
                            *o += g;
                        }
                    }
                });
            }
        }
        Op::Matmul(a, b) => {
            let (m, k) = {
                let s = val(*a).shape();
                (s[0], s[1])
            };
            let n = val(*b).shape()[1];
            if rg(*a) {
                // dA = g · Bᵀ
                let bd = val(*b).data();
                add_into(grads, a.0, m * k, |buf| {
                    gemm_a_bt(m, n, k, gout, bd, buf);
                });
            }
            if rg(*b) {
                // dB = Aᵀ · g
                let ad = val(*a).data();
                add_into(grads, b.0, k * n, |buf| {
                    gemm_at_b(m, k, n, ad, gout, buf);
                });
            }
        }
        Op::MatmulBt(a, b) => {
            let (m, k) = {
                let s = val(*a).shape();
                (s[0], s[1])
            };
            let n = val(*b).shape()[0];
            if rg(*a) {
                // out = A·Bᵀ, so dA = g · B
                let bd = val(*b).data();
                add_into(grads, a.0, m * k, |buf| {
                    gemm(m, n, k, gout, bd, buf);
                });
            }
            if rg(*b) {
                // dB = gᵀ · A
                let ad = val(*a).data();
                add_into(grads, b.0, n * k, |buf| {
                    gemm_at_b(m, n, k, gout, ad, buf);
                });
            }
        }
        Op::Softmax { x, axis } => {
            if rg(*x) {
                let y = nodes[idx].value.data();
                let (outer, len, inner) = split_axis(nodes[idx].value.shape(), *axis);
                add_into(grads, x.0, y.len(), |buf| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let base = o * len * inner + i;
                            let mut dot = F::zero();
                            for j in 0..len {
                                let p = base + j * inner;
                                dot += gout[p] * y[p];
                            }
                            for j in 0..len {
                                let p = base + j * inner;
                                buf[p] += y[p] * (gout[p] - dot);
                            }
                        }
                    }
                });
            }
        }
        Op::Pointwise { x, f } => {
            if rg(*x) {
                match f {
                    PointwiseFn::Relu => {
                        let xd = val(*x).data();
                        add_into(grads, x.0, xd.len(), |buf| {
                            for ((o, &g), &xv) in buf.iter_mut().zip(gout).zip(xd) {
                                if xv > F::zero() {
                                    *o += g;
                                }
                            }
                        });
                    }
                    PointwiseFn::Sigmoid => {
                        let y = nodes[idx].value.data();
                        add_into(grads, x.0, y.len(), |buf| {
                            for ((o, &g), &yv) in buf.iter_mut().zip(gout).zip(y) {
                                *o += g * yv * (F::one() - yv);
                            }
                        });
                    }
                }
            }
        }
        Op::LayerNorm {
            x,
            gain,
            bias,
            axis,
            eps,
        } => {
            let xd = val(*x).data();
            let (outer, len, inner) = split_axis(val(*x).shape(), *axis);
            let g = val(*gain).data();
            let epsf = F::from_f64(*eps);
            let lenf = F::from_f64(len as f64);

            // Recompute per-slice statistics; cheaper than saving them.
            let mut dx = if rg(*x) {
                Some(vec![F::zero(); xd.len()])
            } else {
                None
            };
            let mut dgain = if rg(*gain) {
                Some(vec![F::zero(); len])
            } else {
                None
            };
            let mut dbias = if rg(*bias) {
                Some(vec![F::zero(); len])
            } else {
                None
            };

            for o in 0..outer {
                for i in 0..inner {
                    let base = o * len * inner + i;
                    let mut mean = F::zero();
                    for j in 0..len {
                        mean += xd[base + j * inner];
                    }
                    mean /= lenf;
                    let mut var = F::zero();
                    for j in 0..len {
                        let d = xd[base + j * inner] - mean;
                        var += d * d;
                    }
                    var /= lenf;
                    let denom = (var + epsf).sqrt();

                    let mut mean_dxhat = F::zero();
                    let mut mean_dxhat_xhat = F::zero();
                    for j in 0..len {
                        let p = base + j * inner;
                        let xhat = (xd[p] - mean) / denom;
                        let go = gout[p];
                        if let Some(db) = dbias.as_mut() {
                            db[j] += go;
                        }
                        if let Some(dg) = dgain.as_mut() {
                            dg[j] += go * xhat;
                        }
                        let dxhat = go * g[j];
                        mean_dxhat += dxhat;
                        mean_dxhat_xhat += dxhat * xhat;
                    }
                    if let Some(dx) = dx.as_mut() {
                        mean_dxhat /= lenf;
                        mean_dxhat_xhat /= lenf;
                        for j in 0..len {
                            let p = base + j * inner;
                            let xhat = (xd[p] - mean) / denom;
                            let dxhat = gout[p] * g[j];
                            dx[p] += (dxhat - mean_dxhat - xhat * mean_dxhat_xhat) / denom;
                        }
                    }
                }
            }
            if let Some(d) = dx {
                add_into(grads, x.0, d.len(), |buf| {
                    for (o, v) in buf.iter_mut().zip(&d) {
                        *o += *v;
                    }
                });
            }
            if let Some(d) = dgain {
                add_into(grads, gain.0, len, |buf| {
                    for (o, v) in buf.iter_mut().zip(&d) {
                        *o += *v;
                    }
                });
            }
            if let Some(d) = dbias {
                add_into(grads, bias.0, len, |buf| {
                    for (o, v) in buf.iter_mut().zip(&d) {
                        *o += *v;
                    }
                });
            }
        }
        Op::ConvTemporal { x, w, bias, stride } => {
            let xs = val(*x).shape();
            let ws = val(*w).shape().to_vec();
            let (klen, cin, cout) = (ws[0], ws[1], ws[2]);
            let t = xs[0];
            let spatial: usize = xs[1..xs.len() - 1].iter().product();
            let pad = (klen - 1) / 2;
            let t_out = t.div_ceil(*stride);
            let rows = t_out * spatial;

            if rg(*bias) {
                add_into(grads, bias.0, cout, |buf| {
                    for chunk in gout.chunks_exact(cout) {
                        for (o, &g) in buf.iter_mut().zip(chunk) {
                            *o += g;
                        }
                    }
                });
            }
            if rg(*w) {
                let patches =
                    im2col_temporal(val(*x).data(), t, spatial, cin, klen, *stride, pad);
                add_into(grads, w.0, klen * cin * cout, |buf| {
                    gemm_at_b(rows, klen * cin, cout, &patches, gout, buf);
                });
            }
            if rg(*x) {
                let wd = val(*w).data();
                let mut dpatches = vec![F::zero(); rows * klen * cin];
                gemm_a_bt(rows, cout, klen * cin, gout, wd, &mut dpatches);
                let mut dx = vec![F::zero(); val(*x).numel()];
                col2im_temporal(&dpatches, &mut dx, t, spatial, cin, klen, *stride, pad);
                add_into(grads, x.0, dx.len(), |buf| {
                    for (o, v) in buf.iter_mut().zip(&dx) {
                        *o += *v;
                    }
                });
            }
        }
        Op::ConvSpatial { x, w, bias, stride } => {
            let xs = val(*x).shape().to_vec();
            let ws = val(*w).shape().to_vec();
            let (k, cin, cout) = (ws[0], ws[2], ws[3]);
            let (t, h, wd) = (xs[0], xs[1], xs[2]);
            let pad = (k - 1) / 2;
            let h_out = h.div_ceil(*stride);
            let w_out = wd.div_ceil(*stride);
            let rows = t * h_out * w_out;

            if rg(*bias) {
                add_into(grads, bias.0, cout, |buf| {
                    for chunk in gout.chunks_exact(cout) {
                        for (o, &g) in buf.iter_mut().zip(chunk) {
                            *o += g;
                        }
                    }
                });
            }
            if rg(*w) {
                let patches = im2col_spatial(val(*x).data(), t, h, wd, cin, k, *stride, pad);
                add_into(grads, w.0, k * k * cin * cout, |buf| {
                    gemm_at_b(rows, k * k * cin, cout, &patches, gout, buf);
                });
            }
            if rg(*x) {
                let wdat = val(*w).data();
                let mut dpatches = vec![F::zero(); rows * k * k * cin];
                gemm_a_bt(rows, cout, k * k * cin, gout, wdat, &mut dpatches);
                let mut dx = vec![F::zero(); val(*x).numel()];
                col2im_spatial(&dpatches, &mut dx, t, h, wd, cin, k, *stride, pad);
                add_into(grads, x.0, dx.len(), |buf| {
                    for (o, v) in buf.iter_mut().zip(&dx) {
                        *o += *v;
                    }
                });
            }
        }
        Op::Pool { x, kind } => {
            if rg(*x) {
                let xs = val(*x).shape().to_vec();
                match kind {
                    PoolKind::SpatialAvg => {
                        let (t, h, w, c) = (xs[0], xs[1], xs[2], xs[3]);
                        let inv = F::one() / F::from_f64((h * w) as f64);
                        add_into(grads, x.0, val(*x).numel(), |buf| {
                            for ti in 0..t {
                                let grow = &gout[ti * c..(ti + 1) * c];
                                let frame = &mut buf[ti * h * w * c..(ti + 1) * h * w * c];
                                for px in frame.chunks_exact_mut(c) {
                                    for (o, &g) in px.iter_mut().zip(grow) {
                                        *o += g * inv;
                                    }
                                }
                            }
                        });
                    }
                    PoolKind::GlobalAvg => {
                        let c = *xs.last().unwrap();
                        let lead = val(*x).numel() / c;
                        let inv = F::one() / F::from_f64(lead as f64);
                        add_into(grads, x.0, val(*x).numel(), |buf| {
                            for px in buf.chunks_exact_mut(c) {
                                for (o, &g) in px.iter_mut().zip(gout) {
                                    *o += g * inv;
                                }
                            }
                        });
                    }
                }
            }
        }
        Op::CrossEntropy { logits, labels } => {
            if rg(*logits) {
                let td = val(*logits).data();
                let shape = val(*logits).shape();
                let (n, k) = if shape.len() == 1 {
                    (1, shape[0])
                } else {
                    (shape[0], shape[1])
                };
                let gscale = gout[0] / F::from_f64(n as f64);
                add_into(grads, logits.0, td.len(), |buf| {
                    for (i, &y) in labels.iter().enumerate() {
                        let row = &td[i * k..(i + 1) * k];
                        let mx = row.iter().cloned().fold(F::neg_infinity(), F::max);
                        let mut denom = F::zero();
                        for &v in row {
                            denom += (v - mx).exp();
                        }
                        for j in 0..k {
                            let p = (row[j] - mx).exp() / denom;
                            let ind = if j == y { F::one() } else { F::zero() };
                            buf[i * k + j] += (p - ind) * gscale;
                        }
                    }
                });
            }
        }
        Op::ConcatChannels(parts) => {
            let c_total = *nodes[idx].value.shape().last().unwrap();
            let mut offset = 0;
            for &p in parts {
                let c = *val(p).shape().last().unwrap();
                if rg(p) {
                    let off = offset;
                    add_into(grads, p.0, val(p).numel(), |buf| {
                        for (r, chunk) in buf.chunks_exact_mut(c).enumerate() {
                            let src = &gout[r * c_total + off..r * c_total + off + c];
                            for (o, &g) in chunk.iter_mut().zip(src) {
                                *o += g;
                            }
                        }
                    });
                }
                offset += c;
            }
        }
        Op::GateMul { x, gate } => {
            let xs = val(*x).shape().to_vec();
            let (t, h, w, c) = (xs[0], xs[1], xs[2], xs[3]);
            if rg(*x) {
                let gd = val(*gate).data();
                add_into(grads, x.0, val(*x).numel(), |buf| {
                    for ti in 0..t {
                        let grow = &gd[ti * c..(ti + 1) * c];
                        let gframe = &gout[ti * h * w * c..(ti + 1) * h * w * c];
                        let oframe = &mut buf[ti * h * w * c..(ti + 1) * h * w * c];
                        for (opx, gpx) in oframe.chunks_exact_mut(c).zip(gframe.chunks_exact(c)) {
                            for ((o, &g), &gv) in opx.iter_mut().zip(gpx).zip(grow) {
                                *o += g * gv;
                            }
                        }
                    }
                });
            }
            if rg(*gate) {
                let xd = val(*x).data();
                add_into(grads, gate.0, t * c, |buf| {
                    for ti in 0..t {
                        let orow = &mut buf[ti * c..(ti + 1) * c];
                        let gframe = &gout[ti * h * w * c..(ti + 1) * h * w * c];
                        let xframe = &xd[ti * h * w * c..(ti + 1) * h * w * c];
                        for (gpx, xpx) in gframe.chunks_exact(c).zip(xframe.chunks_exact(c)) {
                            for ((o, &g), &xv) in orow.iter_mut().zip(gpx).zip(xpx) {
                                *o += g * xv;
                            }
                        }
                    }
                });
            }
        }
        Op::TimeInterp { x } => {
            if rg(*x) {
                let t_in = val(*x).shape()[0];
                let c = val(*x).shape()[1];
                let t_out = nodes[idx].value.shape()[0];
                add_into(grads, x.0, val(*x).numel(), |buf| {
                    for (i, lo, hi, w) in interp_taps(t_in, t_out) {
                        let wl = F::from_f64(1.0 - w);
                        let wh = F::from_f64(w);
                        for j in 0..c {
                            let g = gout[i * c + j];
                            buf[lo * c + j] += wl * g;
                            buf[hi * c + j] += wh * g;
                        }
                    }
                });
            }
        }
        Op::Reshape(x) => {
            if rg(*x) {
                add_into(grads, x.0, val(*x).numel(), |buf| {
                    for (o, &g) in buf.iter_mut().zip(gout) {
                        *o += g;
                    }
                });
            }
        }
        Op::Sum(x) => {
            if rg(*x) {
                let g = gout[0];
                add_into(grads, x.0, val(*x).numel(), |buf| {
                    for o in buf.iter_mut() {
                        *o += g;
                    }
                });
            }
        }
    }
}
