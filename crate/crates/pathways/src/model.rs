use crate::blocks::{
    lateral_fuse, pathway_forward, BlockParams, LateralParams, PathwayParams, StageParams,
};
use crate::config::{FusionMode, PathwayConfig, PathwayKind};
use crate::error::{PathwayError, Result};
use crate::sampling::sample_frames;
use mgaf::{MgafConfig, MgafDiagnostics, MgafWeights};
use tensor_core::{seed, xavier_uniform, ParamId, ParamStore, Real, Session, Tensor, TensorRef};
use track_model::{ObjectTensor, TrackEncoder, TrackEncoderConfig};

/// RGB input channels.
pub const VIDEO_CHANNELS: usize = 3;

/// Classifier weights, one matrix per pooled source. Summing the per-source
/// products equals concatenating the pooled vectors through a single linear
/// layer, but keeps each fusion route's parameters separately named.
pub struct HeadParams {
    pub appearance_w: Option<ParamId>,
    pub motion_w: Option<ParamId>,
    pub object_w: Option<ParamId>,
    pub bias: ParamId,
}

/// Predictions of one forward pass: the RGB-head logits, the object-head
/// logits, and per-site fusion diagnostics. Either head may be absent
/// depending on the mode.
pub struct DualOutput {
    pub logits_rgb: Option<TensorRef>,
    pub logits_obj: Option<TensorRef>,
    pub diagnostics: Vec<MgafDiagnostics>,
}

impl DualOutput {
    /// The logits evaluation uses: the RGB head when present, otherwise the
    /// object head.
    pub fn eval_logits(&self) -> TensorRef {
        self.logits_rgb
            .or(self.logits_obj)
            .expect("at least one head")
    }
}

/// A fully wired network for one fusion mode.
pub struct Model<F: Real> {
    pub mode: FusionMode,
    pub pathway_cfg: PathwayConfig,
    pub track_cfg: TrackEncoderConfig,
    pub store: ParamStore<F>,
    appearance: Option<PathwayParams>,
    motion: Option<PathwayParams>,
    laterals: Vec<LateralParams>,
    track: Option<TrackEncoder>,
    head: Option<HeadParams>,
    /// Track-encoder layer consumed by each global block index (1-based),
    /// for the pathway hosting fusion sites.
    site_layers: Vec<Option<usize>>,
}

impl<F: Real> Model<F> {
    pub fn build(
        mode: FusionMode,
        pathway_cfg: PathwayConfig,
        track_cfg: TrackEncoderConfig,
        init_seed: u64,
    ) -> Result<Self> {
        pathway_cfg.validate()?;
        track_cfg.validate()?;
        if pathway_cfg.num_classes != track_cfg.num_classes {
            return Err(PathwayError::InvalidConfig {
                reason: format!(
                    "pathway classes {} != track classes {}",
                    pathway_cfg.num_classes, track_cfg.num_classes
                ),
            });
        }
        let mut store = ParamStore::new();
        let mut rng = seed::rng(init_seed, "init");
        let cfg = &pathway_cfg;
        let app_widths = cfg.appearance_widths.clone();
        let mot_widths = cfg.motion_widths();
        let laterals_on = mode.has_laterals();

        let appearance = if mode.uses_appearance() {
            let mut stages = Vec::with_capacity(cfg.stages());
            let mut in_c = VIDEO_CHANNELS;
            for (s, &w) in app_widths.iter().enumerate() {
                let lat_c = if laterals_on {
                    2 * lateral_in_channels(cfg, &mot_widths, s)
                } else {
                    0
                };
                stages.push(StageParams::init(
                    &mut store,
                    &format!("appearance.stage{s}"),
                    in_c + lat_c,
                    w,
                    cfg.entry_strides[s],
                    cfg,
                    &mut rng,
                )?);
                in_c = w;
            }
            Some(PathwayParams {
                stages,
                widths: app_widths.clone(),
            })
        } else {
            None
        };

        let motion = if mode.uses_motion() {
            let mut stages = Vec::with_capacity(cfg.stages());
            let mut in_c = VIDEO_CHANNELS;
            for (s, &w) in mot_widths.iter().enumerate() {
                stages.push(StageParams::init(
                    &mut store,
                    &format!("motion.stage{s}"),
                    in_c,
                    w,
                    cfg.entry_strides[s],
                    cfg,
                    &mut rng,
                )?);
                in_c = w;
            }
            Some(PathwayParams {
                stages,
                widths: mot_widths.clone(),
            })
        } else {
            None
        };

        let mut laterals = Vec::new();
        if laterals_on {
            for s in 0..cfg.stages() {
                let c = lateral_in_channels(cfg, &mot_widths, s);
                laterals.push(LateralParams::init(
                    &mut store,
                    &format!("lateral{s}"),
                    c,
                    cfg.lateral_kernel,
                    cfg.rate_ratio,
                    &mut rng,
                )?);
            }
        }

        let track = if mode.uses_tracks() {
            Some(TrackEncoder::init(&mut store, "obj", &track_cfg, &mut rng)?)
        } else {
            None
        };

        let mut site_layers = vec![None; cfg.total_blocks()];
        let mut appearance = appearance;
        let mut motion = motion;
        if let Some(host) = mode.mgaf_host() {
            let host_widths = match host {
                PathwayKind::Appearance => &app_widths,
                PathwayKind::Motion => &mot_widths,
            };
            let mut sites = cfg.mgaf_sites.clone();
            sites.sort_unstable();
            for site in sites {
                let stage = (site - 1) / cfg.blocks_per_stage;
                let block = (site - 1) % cfg.blocks_per_stage;
                let cm = host_widths[stage];
                let layer = site.min(track_cfg.layers);
                let cu = track_cfg.channels[layer - 1];
                let mcfg = MgafConfig {
                    feature_channels: cm,
                    object_channels: cu,
                    attention_width: cfg.attention_width.unwrap_or(cm.min(cu)),
                };
                let w = MgafWeights::init(&mut store, &format!("mgaf.site{site}"), mcfg, &mut rng)?;
                let pathway = match host {
                    PathwayKind::Appearance => appearance.as_mut().unwrap(),
                    PathwayKind::Motion => motion.as_mut().unwrap(),
                };
                pathway.stages[stage].blocks[block].fusion = Some(w);
                site_layers[site - 1] = Some(layer);
            }
        }

        let head = if mode.has_rgb_head() {
            let k = cfg.num_classes;
            let appearance_w = if mode.uses_appearance() {
                let c = *app_widths.last().unwrap();
                Some(store.add(
                    "head.appearance.w",
                    xavier_uniform(vec![c, k], c, k, &mut rng),
                )?)
            } else {
                None
            };
            let motion_w = if mode.uses_motion() {
                let c = *mot_widths.last().unwrap();
                Some(store.add("head.motion.w", xavier_uniform(vec![c, k], c, k, &mut rng))?)
            } else {
                None
            };
            let object_w = if mode.concats_object() {
                let c = *track_cfg.channels.last().unwrap();
                Some(store.add("head.object.w", xavier_uniform(vec![c, k], c, k, &mut rng))?)
            } else {
                None
            };
            let bias = store.add("head.b", Tensor::zeros(vec![k]))?;
            Some(HeadParams {
                appearance_w,
                motion_w,
                object_w,
                bias,
            })
        } else {
            None
        };

        Ok(Model {
            mode,
            pathway_cfg,
            track_cfg,
            store,
            appearance,
            motion,
            laterals,
            track,
            head,
            site_layers,
        })
    }

    pub fn appearance_params(&self) -> Option<&PathwayParams> {
        self.appearance.as_ref()
    }

    pub fn motion_params(&self) -> Option<&PathwayParams> {
        self.motion.as_ref()
    }

    pub fn track_encoder(&self) -> Option<&TrackEncoder> {
        self.track.as_ref()
    }

    /// Runs the configured mode. `offset` is the temporal-jitter offset
    /// (0 for eval). Inputs not consumed by the mode may be `None`.
    pub fn forward(
        &self,
        sess: &mut Session<F>,
        video: Option<&Tensor<F>>,
        tracks: Option<&ObjectTensor<F>>,
        offset: usize,
    ) -> Result<DualOutput> {
        let needs_video = self.mode.uses_appearance() || self.mode.uses_motion();

        let track_feats = if self.mode.uses_tracks() {
            let tracks = tracks.ok_or_else(|| PathwayError::ModeNeedsTracks {
                mode: self.mode.to_string(),
            })?;
            Some(self.track.as_ref().unwrap().forward(sess, tracks)?)
        } else {
            None
        };

        let mut diagnostics = Vec::new();
        let mut pooled_appearance = None;
        let mut pooled_motion = None;

        if needs_video {
            let video = video.ok_or_else(|| PathwayError::ModeNeedsVideo {
                mode: self.mode.to_string(),
            })?;

            // Fusion inputs per global block index for the hosting pathway.
            let object_features: Option<Vec<Option<TensorRef>>> =
                if self.mode.mgaf_host().is_some() {
                    let feats = track_feats.as_ref().expect("tracks precede fusion");
                    Some(
                        self.site_layers
                            .iter()
                            .map(|layer| layer.map(|l| feats.layers[l - 1]))
                            .collect(),
                    )
                } else {
                    None
                };

            let motion_out = if let Some(params) = &self.motion {
                let x_m = sample_frames(video, PathwayKind::Motion, &self.pathway_cfg, offset)?;
                let x_m = sess.input(&x_m);
                let feats = if self.mode.mgaf_host() == Some(PathwayKind::Motion) {
                    object_features.as_deref()
                } else {
                    None
                };
                let out = pathway_forward(sess, params, x_m, None, feats)?;
                diagnostics.extend(out.diagnostics.iter().copied());
                Some(out)
            } else {
                None
            };

            if let Some(params) = &self.appearance {
                let x_a =
                    sample_frames(video, PathwayKind::Appearance, &self.pathway_cfg, offset)?;
                let x_a = sess.input(&x_a);
                let lateral_feats = if !self.laterals.is_empty() {
                    let motion_out = motion_out.as_ref().expect("laterals need motion");
                    let mut feats = Vec::with_capacity(self.laterals.len());
                    for (lat, &src) in self.laterals.iter().zip(&motion_out.stage_inputs) {
                        feats.push(lateral_fuse(sess, lat, src)?);
                    }
                    Some(feats)
                } else {
                    None
                };
                let feats = if self.mode.mgaf_host() == Some(PathwayKind::Appearance) {
                    object_features.as_deref()
                } else {
                    None
                };
                let out = pathway_forward(sess, params, x_a, lateral_feats.as_deref(), feats)?;
                diagnostics.extend(out.diagnostics.iter().copied());
                pooled_appearance = Some(out.pooled);
            }
            pooled_motion = motion_out.map(|o| o.pooled);
        }

        let logits_rgb = if let Some(head) = &self.head {
            let k = self.pathway_cfg.num_classes;
            let mut acc: Option<TensorRef> = None;
            let mut add_part =
                |sess: &mut Session<F>, pooled: TensorRef, w: ParamId| -> Result<()> {
                    let c = sess.tape.value(pooled).numel();
                    let row = sess.tape.reshape(pooled, vec![1, c])?;
                    let wref = sess.param(w);
                    let part = sess.tape.matmul(row, wref)?;
                    acc = Some(match acc {
                        Some(a) => sess.tape.add(a, part)?,
                        None => part,
                    });
                    Ok(())
                };
            if let (Some(p), Some(w)) = (pooled_appearance, head.appearance_w) {
                add_part(sess, p, w)?;
            }
            if let (Some(p), Some(w)) = (pooled_motion, head.motion_w) {
                add_part(sess, p, w)?;
            }
            if let (Some(feats), Some(w)) = (&track_feats, head.object_w) {
                add_part(sess, feats.pooled, w)?;
            }
            let sum = acc.expect("rgb head with no inputs");
            let bias = sess.param(head.bias);
            let biased = sess.tape.add_bias(sum, bias)?;
            Some(sess.tape.reshape(biased, vec![k])?)
        } else {
            None
        };

        Ok(DualOutput {
            logits_rgb,
            logits_obj: track_feats.map(|f| f.logits),
            diagnostics,
        })
    }
}

fn lateral_in_channels(cfg: &PathwayConfig, motion_widths: &[usize], stage: usize) -> usize {
    let _ = cfg;
    if stage == 0 {
        VIDEO_CHANNELS
    } else {
        motion_widths[stage - 1]
    }
}

/// Joint training loss `lambda_r * CE(rgb) + lambda_o * CE(obj)`. A missing
/// head contributes zero and its weight is ignored; both missing is an error.
pub fn joint_loss<F: Real>(
    sess: &mut Session<F>,
    out: &DualOutput,
    label: usize,
    lambda_rgb: f64,
    lambda_obj: f64,
) -> Result<TensorRef> {
    let mut total: Option<TensorRef> = None;
    for (logits, weight) in [
        (out.logits_rgb, lambda_rgb),
        (out.logits_obj, lambda_obj),
    ] {
        if let Some(l) = logits {
            let ce = sess.tape.cross_entropy(l, &[label])?;
            let term = sess.tape.scale(ce, F::from_f64(weight))?;
            total = Some(match total {
                Some(t) => sess.tape.add(t, term)?,
                None => term,
            });
        }
    }
    total.ok_or(PathwayError::NoHeads)
}

/// Exact analytic parameter count for a mode; must equal the brute-force
/// enumeration of the built model's tensors.
pub fn count_parameters(
    pcfg: &PathwayConfig,
    tcfg: &TrackEncoderConfig,
    mode: FusionMode,
) -> usize {
    let k = pcfg.spatial_kernel;
    let t = pcfg.temporal_kernel;
    let app_widths = &pcfg.appearance_widths;
    let mot_widths = pcfg.motion_widths();
    let laterals_on = mode.has_laterals();
    let mut total = 0usize;

    let stage_count = |in_c: usize, w: usize| k * k * in_c * w + w + 2 * w;

    if mode.uses_appearance() {
        let mut in_c = VIDEO_CHANNELS;
        for (s, &w) in app_widths.iter().enumerate() {
            let lat_c = if laterals_on {
                2 * lateral_in_channels(pcfg, &mot_widths, s)
            } else {
                0
            };
            total += stage_count(in_c + lat_c, w);
            total += pcfg.blocks_per_stage * BlockParams::body_count(w, t, k);
            in_c = w;
        }
    }
    if mode.uses_motion() {
        let mut in_c = VIDEO_CHANNELS;
        for &w in &mot_widths {
            total += stage_count(in_c, w);
            total += pcfg.blocks_per_stage * BlockParams::body_count(w, t, k);
            in_c = w;
        }
    }
    if laterals_on {
        for s in 0..pcfg.stages() {
            let c = lateral_in_channels(pcfg, &mot_widths, s);
            total += pcfg.lateral_kernel * c * (2 * c) + 2 * c;
        }
    }
    if mode.uses_tracks() {
        total += track_model::count_parameters(tcfg);
    }
    if let Some(host) = mode.mgaf_host() {
        let host_widths = match host {
            PathwayKind::Appearance => app_widths.clone(),
            PathwayKind::Motion => mot_widths.clone(),
        };
        for &site in &pcfg.mgaf_sites {
            let stage = (site - 1) / pcfg.blocks_per_stage;
            let cm = host_widths[stage];
            let layer = site.min(tcfg.layers);
            let cu = tcfg.channels[layer - 1];
            let mcfg = MgafConfig {
                feature_channels: cm,
                object_channels: cu,
                attention_width: pcfg.attention_width.unwrap_or(cm.min(cu)),
            };
            total += mcfg.parameter_count();
        }
    }
    if mode.has_rgb_head() {
        let classes = pcfg.num_classes;
        if mode.uses_appearance() {
            total += app_widths.last().unwrap() * classes;
        }
        if mode.uses_motion() {
            total += mot_widths.last().unwrap() * classes;
        }
        if mode.concats_object() {
            total += tcfg.channels.last().unwrap() * classes;
        }
        total += classes;
    }
    total
}
