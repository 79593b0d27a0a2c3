//! Stacked soft-gated hourglass network over 1D intervals.
//!
//! stem conv (1 → width) → `n_blocks` × hourglass → 1×1 head (width → K)
//! → sigmoid. Inside each hourglass, encoder level `i` runs a residual unit
//! and max-pools; decoder level `i` upsamples, convolves, merges
//! `α_i · skip_i + up` and runs another residual unit. Every residual unit
//! carries its own gate on the identity path: `out = α · x + branch(x)`.

use rayon::prelude::*;

use super::layers::{
    conv_backward, conv_forward, maxpool_backward, maxpool_forward, norm_backward, norm_forward, relu, relu_backward,
    sigmoid, upsample_backward, upsample_forward, NormCache,
};
use super::loss::bce_grad_logits;
use super::params::{BlockIdx, Layout, ModelConfig, Parameters, ResUnitIdx};
use super::tensor::HeatmapSet;
use crate::error::{Error, Result};

struct Ctx<'a> {
    p: &'a Parameters,
    width: usize,
    k: usize,
}

struct ResCache {
    x: Vec<f64>,
    norm1: NormCache,
    act1: Vec<f64>,
    norm2: NormCache,
    act2: Vec<f64>,
}

fn res_forward(ctx: &Ctx, u: &ResUnitIdx, x: Vec<f64>, n: usize) -> (Vec<f64>, ResCache) {
    let (w, k, p) = (ctx.width, ctx.k, ctx.p);
    let (mut act1, norm1) = norm_forward(&x, w, n, p.data(u.norm1.0), p.data(u.norm1.1));
    relu(&mut act1);
    let h1 = conv_forward(&act1, w, n, p.data(u.conv1.0), p.data(u.conv1.1), w, k);
    let (mut act2, norm2) = norm_forward(&h1, w, n, p.data(u.norm2.0), p.data(u.norm2.1));
    relu(&mut act2);
    let mut out = conv_forward(&act2, w, n, p.data(u.conv2.0), p.data(u.conv2.1), w, k);
    let alpha = p.scalar(u.gate);
    for (o, xi) in out.iter_mut().zip(&x) {
        *o += alpha * xi;
    }
    (
        out,
        ResCache {
            x,
            norm1,
            act1,
            norm2,
            act2,
        },
    )
}

fn res_backward(ctx: &Ctx, u: &ResUnitIdx, c: &ResCache, n: usize, dout: &[f64], g: &mut Parameters) -> Vec<f64> {
    let (w, k, p) = (ctx.width, ctx.k, ctx.p);
    let alpha = p.scalar(u.gate);
    g.tensor_mut(u.gate).data[0] += dout.iter().zip(&c.x).map(|(a, b)| a * b).sum::<f64>();

    let (dw, db) = two_mut(g, u.conv2);
    let mut d_act2 = conv_backward(&c.act2, w, n, p.data(u.conv2.0), w, k, dout, dw, db);
    relu_backward(&c.act2, &mut d_act2);
    let (ds, dh) = two_mut(g, u.norm2);
    let dh1 = norm_backward(&c.norm2, w, n, p.data(u.norm2.0), &d_act2, ds, dh);
    let (dw, db) = two_mut(g, u.conv1);
    let mut d_act1 = conv_backward(&c.act1, w, n, p.data(u.conv1.0), w, k, &dh1, dw, db);
    relu_backward(&c.act1, &mut d_act1);
    let (ds, dh) = two_mut(g, u.norm1);
    let mut dx = norm_backward(&c.norm1, w, n, p.data(u.norm1.0), &d_act1, ds, dh);
    for (d, o) in dx.iter_mut().zip(dout) {
        *d += alpha * o;
    }
    dx
}

fn two_mut(g: &mut Parameters, (a, b): (usize, usize)) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a < b);
    let (lo, hi) = g.split_at_mut(b);
    (&mut lo[a].data, &mut hi[0].data)
}

struct LevelCache {
    enc: ResCache,
    pool_arg: Vec<u32>,
    skip: Vec<f64>,
    up_in: Vec<f64>,
    dec: ResCache,
}

/// Skip-tensor hook, called on each level's skip before merging.
pub(crate) type SkipHook<'a> = &'a mut dyn FnMut(usize, usize, &mut Vec<f64>);

fn block_forward(
    ctx: &Ctx,
    blk: &BlockIdx,
    block_index: usize,
    x: Vec<f64>,
    length: usize,
    hook: &mut Option<SkipHook>,
) -> (Vec<f64>, Vec<LevelCache>) {
    let depth = blk.enc.len();
    let w = ctx.width;
    let mut cur = x;
    let mut n = length;
    let mut down: Vec<(ResCache, Vec<u32>, Vec<f64>)> = Vec::with_capacity(depth);
    for enc in &blk.enc {
        let (skip, cache) = res_forward(ctx, enc, cur, n);
        let (pooled, arg) = maxpool_forward(&skip, w, n);
        down.push((cache, arg, skip));
        cur = pooled;
        n /= 2;
    }
    let mut levels: Vec<Option<LevelCache>> = (0..depth).map(|_| None).collect();
    for i in (0..depth).rev() {
        let (enc_cache, pool_arg, mut skip) = down.pop().expect("one entry per level");
        if let Some(h) = hook.as_mut() {
            h(block_index, i, &mut skip);
        }
        let up_in = upsample_forward(&cur);
        n *= 2;
        let (wi, bi) = blk.up[i];
        let mut merged = conv_forward(&up_in, w, n, ctx.p.data(wi), ctx.p.data(bi), w, ctx.k);
        let alpha = ctx.p.scalar(blk.skip_gate[i]);
        for (m, s) in merged.iter_mut().zip(&skip) {
            *m += alpha * s;
        }
        let (out, dec) = res_forward(ctx, &blk.dec[i], merged, n);
        levels[i] = Some(LevelCache {
            enc: enc_cache,
            pool_arg,
            skip,
            up_in,
            dec,
        });
        cur = out;
    }
    (cur, levels.into_iter().map(|l| l.expect("filled")).collect())
}

fn block_backward(
    ctx: &Ctx,
    blk: &BlockIdx,
    levels: &[LevelCache],
    length: usize,
    dout: Vec<f64>,
    g: &mut Parameters,
) -> Vec<f64> {
    let depth = levels.len();
    let w = ctx.width;
    let mut d_cur = dout;
    let mut d_skips: Vec<Vec<f64>> = Vec::with_capacity(depth);
    for (i, lv) in levels.iter().enumerate() {
        let n = length >> i;
        let d_merged = res_backward(ctx, &blk.dec[i], &lv.dec, n, &d_cur, g);
        let alpha = ctx.p.scalar(blk.skip_gate[i]);
        g.tensor_mut(blk.skip_gate[i]).data[0] += d_merged.iter().zip(&lv.skip).map(|(a, b)| a * b).sum::<f64>();
        d_skips.push(d_merged.iter().map(|d| alpha * d).collect());
        let (wi, bi) = blk.up[i];
        let (dw, db) = two_mut(g, (wi, bi));
        let d_up = conv_backward(&lv.up_in, w, n, ctx.p.data(wi), w, ctx.k, &d_merged, dw, db);
        d_cur = upsample_backward(&d_up);
    }
    for i in (0..depth).rev() {
        let n = length >> i;
        let lv = &levels[i];
        let mut d_skip = maxpool_backward(&lv.pool_arg, w * n, &d_cur);
        for (a, b) in d_skip.iter_mut().zip(&d_skips[i]) {
            *a += b;
        }
        d_cur = res_backward(ctx, &blk.enc[i], &lv.enc, n, &d_skip, g);
    }
    d_cur
}

struct Trace {
    stem_in: Vec<f64>,
    blocks: Vec<Vec<LevelCache>>,
    head_in: Vec<f64>,
    logits: Vec<f64>,
}

/// The network bound to its configuration.
#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
    layout: Layout,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            layout: Layout::new(&cfg),
            cfg,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn check(&self, params: &Parameters, input: &[f64]) -> Result<()> {
        if params.len() != self.layout.len() {
            return Err(Error::Shape(format!(
                "parameter set has {} tensors, model needs {}",
                params.len(),
                self.layout.len()
            )));
        }
        if input.len() != self.cfg.length {
            return Err(Error::Shape(format!(
                "input length {} != model length {}",
                input.len(),
                self.cfg.length
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite model input".into()));
        }
        Ok(())
    }

    fn trace(&self, params: &Parameters, input: &[f64], mut hook: Option<SkipHook>) -> Trace {
        let cfg = &self.cfg;
        let ctx = Ctx {
            p: params,
            width: cfg.width,
            k: cfg.kernel_size,
        };
        let l = cfg.length;
        let (sw, sb) = self.layout.stem;
        let mut x = conv_forward(
            input,
            1,
            l,
            params.data(sw),
            params.data(sb),
            cfg.width,
            cfg.kernel_size,
        );
        let mut blocks = Vec::with_capacity(cfg.n_blocks);
        for (b, blk) in self.layout.blocks.iter().enumerate() {
            let (out, levels) = block_forward(&ctx, blk, b, x, l, &mut hook);
            blocks.push(levels);
            x = out;
        }
        let (hw, hb) = self.layout.head;
        let logits = conv_forward(&x, cfg.width, l, params.data(hw), params.data(hb), cfg.keypoints, 1);
        Trace {
            stem_in: input.to_vec(),
            blocks,
            head_in: x,
            logits,
        }
    }

    fn to_heatmap(&self, logits: &[f64]) -> Result<HeatmapSet> {
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite activations in forward pass".into()));
        }
        HeatmapSet::from_vec(
            self.cfg.keypoints,
            self.cfg.length,
            logits.iter().map(|&z| sigmoid(z)).collect(),
        )
    }

    /// Heatmaps for a single interval.
    pub fn forward_one(&self, params: &Parameters, input: &[f64]) -> Result<HeatmapSet> {
        self.check(params, input)?;
        self.to_heatmap(&self.trace(params, input, None).logits)
    }

    /// Heatmaps for a batch; intervals are evaluated in parallel.
    pub fn forward(&self, params: &Parameters, batch: &[Vec<f64>]) -> Result<Vec<HeatmapSet>> {
        batch.par_iter().map(|x| self.forward_one(params, x)).collect()
    }

    /// Hash of every ReLU on/off decision and max-pool winner for `input`.
    ///
    /// Two parameter sets with equal signatures lie in the same smooth piece
    /// of the network function, which is what finite-difference checks need.
    #[doc(hidden)]
    pub fn activation_signature(&self, params: &Parameters, input: &[f64]) -> u64 {
        use std::hash::{Hash, Hasher};
        let tr = self.trace(params, input, None);
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mask = |v: &[f64], h: &mut std::collections::hash_map::DefaultHasher| {
            for x in v {
                (*x > 0.0).hash(h);
            }
        };
        for levels in &tr.blocks {
            for lv in levels {
                for c in [&lv.enc, &lv.dec] {
                    mask(&c.act1, &mut h);
                    mask(&c.act2, &mut h);
                }
                lv.pool_arg.hash(&mut h);
            }
        }
        h.finish()
    }

    #[cfg(test)]
    pub(crate) fn forward_hooked(&self, params: &Parameters, input: &[f64], hook: SkipHook) -> Result<HeatmapSet> {
        self.check(params, input)?;
        self.to_heatmap(&self.trace(params, input, Some(hook)).logits)
    }

    /// Loss contribution and gradients of one sample, where the loss is the
    /// mean BCE over `denominator` entries.
    fn sample_grad(
        &self,
        params: &Parameters,
        input: &[f64],
        target: &HeatmapSet,
        denominator: f64,
        g: &mut Parameters,
    ) -> Result<f64> {
        self.check(params, input)?;
        let cfg = &self.cfg;
        if target.channels != cfg.keypoints || target.length != cfg.length {
            return Err(Error::Shape(format!(
                "target {}x{} does not match model {}x{}",
                target.channels, target.length, cfg.keypoints, cfg.length
            )));
        }
        let tr = self.trace(params, input, None);
        let probs = self.to_heatmap(&tr.logits)?;
        let (loss_sum, d_logits) = bce_grad_logits(&probs.data, &target.data, denominator);

        let ctx = Ctx {
            p: params,
            width: cfg.width,
            k: cfg.kernel_size,
        };
        let l = cfg.length;
        let (hw, hb) = self.layout.head;
        let (dw, db) = two_mut(g, (hw, hb));
        let mut d = conv_backward(
            &tr.head_in,
            cfg.width,
            l,
            params.data(hw),
            cfg.keypoints,
            1,
            &d_logits,
            dw,
            db,
        );
        for (blk, levels) in self.layout.blocks.iter().zip(&tr.blocks).rev() {
            d = block_backward(&ctx, blk, levels, l, d, g);
        }
        let (sw, sb) = self.layout.stem;
        let (dw, db) = two_mut(g, (sw, sb));
        conv_backward(
            &tr.stem_in,
            1,
            l,
            params.data(sw),
            cfg.width,
            cfg.kernel_size,
            &d,
            dw,
            db,
        );
        Ok(loss_sum)
    }

    /// Mean BCE over the batch and its exact gradient with respect to every
    /// parameter.
    ///
    /// Samples are processed in fixed-size chunks whose partial sums are
    /// added in order, so the result does not depend on the thread count.
    pub fn loss_and_grad(
        &self,
        params: &Parameters,
        batch: &[Vec<f64>],
        targets: &[HeatmapSet],
    ) -> Result<(f64, Parameters)> {
        const CHUNK: usize = 4;
        if batch.len() != targets.len() || batch.is_empty() {
            return Err(Error::Shape(format!(
                "{} inputs vs {} targets",
                batch.len(),
                targets.len()
            )));
        }
        let denominator = (batch.len() * self.cfg.keypoints * self.cfg.length) as f64;
        let partials: Vec<Result<(f64, Parameters)>> = batch
            .par_chunks(CHUNK)
            .zip(targets.par_chunks(CHUNK))
            .map(|(xs, ts)| {
                let mut g = params.zeros_like();
                let mut loss = 0.0;
                for (x, t) in xs.iter().zip(ts) {
                    loss += self.sample_grad(params, x, t, denominator, &mut g)?;
                }
                Ok((loss, g))
            })
            .collect();
        let mut total = 0.0;
        let mut grads: Option<Parameters> = None;
        for part in partials {
            let (loss, g) = part?;
            total += loss;
            match grads.as_mut() {
                Some(acc) => acc.add_assign(&g),
                None => grads = Some(g),
            }
        }
        Ok((total, grads.expect("non-empty batch")))
    }
}

/// Batched forward pass.
pub fn model_forward(params: &Parameters, cfg: &ModelConfig, batch: &[Vec<f64>]) -> Result<Vec<HeatmapSet>> {
    Model::new(*cfg)?.forward(params, batch)
}

/// Gradients of `bce_loss ∘ model_forward` with respect to all parameters.
pub fn backward(
    params: &Parameters,
    cfg: &ModelConfig,
    batch: &[Vec<f64>],
    targets: &[HeatmapSet],
) -> Result<Parameters> {
    Ok(Model::new(*cfg)?.loss_and_grad(params, batch, targets)?.1)
}
