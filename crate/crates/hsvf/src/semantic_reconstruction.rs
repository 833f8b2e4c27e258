//! Cross-domain semantic reconstruction: a generator produces a haze-free
//! candidate O_SR conditioned on predicted semantics, trained against clear
//! images by a bank of region-aware discriminators — one realism head per
//! semantic class, each scored only inside that class's mask.

use candle_core::Tensor;
use candle_nn::ops::{sigmoid, softmax};

use crate::data_model::{SemanticMask, IGNORE_LABEL, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::ops::{clamp01, global_avg, instance_norm, leaky_relu, upsample2};
use crate::nn::{mask_to_onehot, Conv2d, Linear, ParamStore};

const SLOPE: f64 = 0.2;
const IN_EPS: f64 = 1e-5;
const LOG_CLAMP: f64 = 1e-8;

/// Stride between discriminator input pixels and score-map pixels.
pub const SCORE_STRIDE: usize = 8;

/// Minimum transmission the generator may predict; keeps the scattering
/// inversion well conditioned.
pub const T_FLOOR: f64 = 0.05;

fn act(x: &Tensor) -> Result<Tensor> {
    leaky_relu(x, SLOPE)
}

/// Six binary class masks stacked as a (1, 6, H, W) tensor. Ignore pixels
/// are zero in every plane.
pub struct RegionMaskSet {
    masks: Tensor,
}

impl RegionMaskSet {
    pub fn tensor(&self) -> &Tensor {
        &self.masks
    }

    pub fn class_mask(&self, n: usize) -> Result<Tensor> {
        if n >= NUM_CLASSES {
            return Err(Error::shape(format!("class index {n} out of range")));
        }
        Ok(self.masks.narrow(1, n, 1)?)
    }
}

/// Binary per-class masks from a semantic mask.
pub fn region_masks(mask: &SemanticMask, store: &ParamStore) -> Result<RegionMaskSet> {
    let (onehot, _) = mask_to_onehot(mask, store.dtype(), store.device())?;
    Ok(RegionMaskSet { masks: onehot })
}

/// Majority-vote downsampling of a semantic mask by an integer factor.
/// Ties go to the smaller label; blocks that are entirely ignore stay ignore.
pub fn downsample_mask(mask: &SemanticMask, factor: usize) -> Result<SemanticMask> {
    let (h, w) = (mask.height(), mask.width());
    if factor == 0 || h % factor != 0 || w % factor != 0 {
        return Err(Error::shape(format!(
            "mask {h}x{w} not divisible by downsampling factor {factor}"
        )));
    }
    let (oh, ow) = (h / factor, w / factor);
    let labels = mask.labels();
    let mut out = vec![IGNORE_LABEL; oh * ow];
    for by in 0..oh {
        for bx in 0..ow {
            let mut counts = [0usize; NUM_CLASSES];
            for dy in 0..factor {
                for dx in 0..factor {
                    let l = labels[(by * factor + dy) * w + bx * factor + dx];
                    if l != IGNORE_LABEL {
                        counts[l as usize] += 1;
                    }
                }
            }
            if let Some((best, _)) =
                counts.iter().enumerate().filter(|(_, &c)| c > 0).max_by(|a, b| {
                    a.1.cmp(b.1).then(b.0.cmp(&a.0))
                })
            {
                out[by * ow + bx] = best as u8;
            }
        }
    }
    SemanticMask::new(oh, ow, out)
}

/// Shared convolutional trunk with six per-class 1×1 sigmoid heads producing
/// patch-level realism scores at 1/8 input resolution.
pub struct DiscriminatorBank {
    trunk: Vec<Conv2d>,
    heads: Vec<Conv2d>,
}

impl DiscriminatorBank {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        let widths = [3usize, 16, 32, 48];
        let mut trunk = Vec::new();
        for i in 0..3 {
            trunk.push(Conv2d::new(
                store,
                &format!("{name}.trunk{i}"),
                widths[i],
                widths[i + 1],
                3,
                2,
                1,
                true,
            )?);
        }
        let mut heads = Vec::new();
        for n in 0..NUM_CLASSES {
            heads.push(Conv2d::new(store, &format!("{name}.head{n}"), 48, 1, 1, 1, 0, true)?);
        }
        Ok(Self { trunk, heads })
    }

    /// Per-class score maps (1, 6, H/8, W/8), entries in (0,1). With
    /// `frozen` the bank's parameters are detached so no gradient reaches
    /// them (used by the generator objective).
    pub fn score(&self, image: &Tensor, frozen: bool) -> Result<Tensor> {
        let (_, _, h, w) = image.dims4()?;
        if h % SCORE_STRIDE != 0 || w % SCORE_STRIDE != 0 {
            return Err(Error::shape(format!(
                "discriminator input {h}x{w} not divisible by stride {SCORE_STRIDE}"
            )));
        }
        let mut y = image.clone();
        for (i, conv) in self.trunk.iter().enumerate() {
            y = conv.forward_opt(&y, frozen)?;
            if i > 0 {
                y = instance_norm(&y, IN_EPS)?;
            }
            y = act(&y)?;
        }
        let scores: Vec<Tensor> = self
            .heads
            .iter()
            .map(|head| Ok(sigmoid(&head.forward_opt(&y, frozen)?)?))
            .collect::<Result<_>>()?;
        Ok(Tensor::cat(&scores.iter().collect::<Vec<_>>(), 1)?)
    }
}

/// Masked mean of log(scores) per class, averaged over classes with nonzero
/// coverage. `masks` and `scores` are (1, 6, h, w).
fn masked_log_mean(scores: &Tensor, masks: &Tensor) -> Result<Tensor> {
    if scores.dims() != masks.dims() {
        return Err(Error::shape(format!(
            "score map {:?} does not match mask set {:?}",
            scores.dims(),
            masks.dims()
        )));
    }
    let logs = (scores.maximum(LOG_CLAMP)?.log()? * masks)?;
    let per_class_sum = logs.sum_keepdim(3)?.sum_keepdim(2)?; // (1,6,1,1)
    let coverage = masks.sum_keepdim(3)?.sum_keepdim(2)?;
    let cov: Vec<f64> = coverage
        .to_dtype(candle_core::DType::F64)?
        .flatten_all()?
        .to_vec1()?;
    let covered: Vec<usize> = (0..NUM_CLASSES).filter(|&n| cov[n] > 0.0).collect();
    if covered.is_empty() {
        return Err(Error::data("region loss: no class has nonzero mask coverage"));
    }
    let mut total: Option<Tensor> = None;
    for &n in &covered {
        let term = (per_class_sum.narrow(1, n, 1)? / cov[n])?;
        total = Some(match total {
            Some(t) => (t + term)?,
            None => term,
        });
    }
    Ok((total.unwrap().squeeze(3)?.squeeze(2)?.squeeze(1)?.squeeze(0)? / covered.len() as f64)?)
}

/// Discriminator objective (negated Eq.-7 value, minimized): masked BCE on
/// real clear images against the reconstruction, with the generator output
/// treated as constant.
pub fn discriminator_loss(
    bank: &DiscriminatorBank,
    clear: &Tensor,
    clear_masks: &RegionMaskSet,
    o_sr: &Tensor,
    pred_masks: &RegionMaskSet,
) -> Result<Tensor> {
    let real = bank.score(clear, false)?;
    let fake = bank.score(&o_sr.detach(), false)?;
    let ones = Tensor::ones(fake.dims(), fake.dtype(), fake.device())?;
    let real_term = masked_log_mean(&real, clear_masks.tensor())?;
    let fake_term = masked_log_mean(&(ones - &fake)?, pred_masks.tensor())?;
    Ok((real_term + fake_term)?.neg()?)
}

/// Non-saturating generator objective: −E[Σ_n M_n log D_n(O_SR)] with the
/// bank frozen.
pub fn generator_region_loss(
    bank: &DiscriminatorBank,
    o_sr: &Tensor,
    pred_masks: &RegionMaskSet,
) -> Result<Tensor> {
    let fake = bank.score(o_sr, true)?;
    Ok(masked_log_mean(&fake, pred_masks.tensor())?.neg()?)
}

/// SPADE-style normalization: instance norm whose scale and shift are
/// predicted per pixel from the (pooled) segmentation probabilities.
struct SpadeNorm {
    shared: Conv2d,
    gamma: Conv2d,
    beta: Conv2d,
    pool: usize,
}

impl SpadeNorm {
    fn new(store: &mut ParamStore, name: &str, channels: usize, pool: usize) -> Result<Self> {
        Ok(Self {
            shared: Conv2d::new(store, &format!("{name}.shared"), NUM_CLASSES, 16, 3, 1, 1, true)?,
            gamma: Conv2d::new(store, &format!("{name}.gamma"), 16, channels, 1, 1, 0, true)?,
            beta: Conv2d::new(store, &format!("{name}.beta"), 16, channels, 1, 1, 0, true)?,
            pool,
        })
    }

    fn forward(&self, x: &Tensor, seg_probs: &Tensor) -> Result<Tensor> {
        let seg = if self.pool > 1 { seg_probs.avg_pool2d(self.pool)? } else { seg_probs.clone() };
        if seg.dims4()?.2 != x.dims4()?.2 {
            return Err(Error::shape(format!(
                "segmentation scale {:?} does not match features {:?}",
                seg.dims(),
                x.dims()
            )));
        }
        let h = act(&self.shared.forward(&seg)?)?;
        let gamma = self.gamma.forward(&h)?;
        let beta = self.beta.forward(&h)?;
        Ok((instance_norm(x, IN_EPS)? * (gamma + 1.0)?)?.add(&beta)?)
    }
}

/// Reconstruction generator G_SR. A small encoder over the hazy visible
/// image is fused with the alignment content features, decoded through
/// SPADE-modulated stages, and finished by a physical head: the network
/// predicts a transmission map t ∈ [T_FLOOR, 1] and a global airlight A,
/// and outputs the inverted scattering model (I − A(1−t)) / t.
pub struct ReconGenerator {
    enc1: Conv2d,
    enc2: Conv2d,
    enc3: Conv2d,
    fuse: Conv2d,
    spade1: SpadeNorm,
    dec1: Conv2d,
    spade2: SpadeNorm,
    dec2: Conv2d,
    t_head: Conv2d,
    a_head: Linear,
}

impl ReconGenerator {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            enc1: Conv2d::new(store, &format!("{name}.enc1"), 3, 16, 3, 1, 1, true)?,
            enc2: Conv2d::new(store, &format!("{name}.enc2"), 16, 24, 3, 2, 1, true)?,
            enc3: Conv2d::new(store, &format!("{name}.enc3"), 24, 32, 3, 2, 1, true)?,
            fuse: Conv2d::new(
                store,
                &format!("{name}.fuse"),
                32 + crate::semantic_alignment::CONTENT_CHANNELS,
                48,
                1,
                1,
                0,
                true,
            )?,
            spade1: SpadeNorm::new(store, &format!("{name}.spade1"), 48, 4)?,
            dec1: Conv2d::new(store, &format!("{name}.dec1"), 48, 24, 3, 1, 1, true)?,
            spade2: SpadeNorm::new(store, &format!("{name}.spade2"), 24, 2)?,
            dec2: Conv2d::new(store, &format!("{name}.dec2"), 24, 16, 3, 1, 1, true)?,
            t_head: Conv2d::new(store, &format!("{name}.t_head"), 16, 1, 3, 1, 1, true)?,
            a_head: Linear::new(store, &format!("{name}.a_head"), 16, 3, true)?,
        })
    }

    /// Predicted transmission (1, 1, H, W) and airlight (1, 3).
    pub fn predict_physics(
        &self,
        hazy_vis: &Tensor,
        seg_logits: &Tensor,
        content: &Tensor,
    ) -> Result<(Tensor, Tensor)> {
        let (_, _, h, w) = hazy_vis.dims4()?;
        let (_, _, ch, cw) = content.dims4()?;
        if ch * 4 != h || cw * 4 != w {
            return Err(Error::shape(format!(
                "content scale {ch}x{cw} does not match input {h}x{w}"
            )));
        }
        if seg_logits.dims4()?.2 != h {
            return Err(Error::shape("segmentation logits must be at input resolution"));
        }
        let probs = softmax(seg_logits, 1)?;
        let e = act(&instance_norm(&self.enc1.forward(hazy_vis)?, IN_EPS)?)?;
        let e = act(&instance_norm(&self.enc2.forward(&e)?, IN_EPS)?)?;
        let e = act(&instance_norm(&self.enc3.forward(&e)?, IN_EPS)?)?;
        let y = self.fuse.forward(&Tensor::cat(&[&e, content], 1)?)?;
        let y = upsample2(&act(&self.dec1.forward(&self.spade1.forward(&y, &probs)?)?)?)?;
        let y = upsample2(&act(&self.dec2.forward(&self.spade2.forward(&y, &probs)?)?)?)?;
        let t = ((sigmoid(&self.t_head.forward(&y)?)? * (1.0 - T_FLOOR))? + T_FLOOR)?;
        let a = sigmoid(&self.a_head.forward(&global_avg(&y)?)?)?;
        Ok((t, a))
    }

    /// Haze-free candidate O_SR in [0,1], same size as the input.
    pub fn forward(&self, hazy_vis: &Tensor, seg_logits: &Tensor, content: &Tensor) -> Result<Tensor> {
        let (t, a) = self.predict_physics(hazy_vis, seg_logits, content)?;
        let (n, _, h, w) = hazy_vis.dims4()?;
        let a = a.reshape((n, 3, 1, 1))?;
        let t3 = t.broadcast_as((n, 3, h, w))?;
        let airlight = a.broadcast_mul(&(t3.neg()? + 1.0)?)?;
        clamp01(&(hazy_vis.sub(&airlight)? / t3)?)
    }
}

pub fn generate_reconstruction(
    gen: &ReconGenerator,
    hazy_vis: &Tensor,
    seg_logits: &Tensor,
    content: &Tensor,
) -> Result<Tensor> {
    gen.forward(hazy_vis, seg_logits, content)
}
