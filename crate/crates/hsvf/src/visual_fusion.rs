//! Cross-modal visual fusion: shallow stems per modality, windowed joint
//! self/cross-attention over the two feature maps, a decoder producing the
//! fused image O_VF, and the SSIM/texture/intensity fusion losses.

use candle_core::Tensor;
use candle_nn::ops::{sigmoid, softmax};

use crate::error::{Error, Result};
use crate::nn::ops::{
    broadcast_channels, gradient_magnitude, instance_norm, leaky_relu, mean_l1, ssim_mean,
    upsample2,
};
use crate::nn::{Conv2d, ParamStore};

pub const FEATURE_CHANNELS: usize = 32;
pub const WINDOW: usize = 8;
pub const HEADS: usize = 2;
const SLOPE: f64 = 0.2;
const IN_EPS: f64 = 1e-5;

/// Which attention reads contribute to the fused features; `Joint` is the
/// full model, the others are ablation arms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttentionArm {
    Joint,
    SelfOnly,
    CrossOnly,
    NoAttention,
}

impl AttentionArm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "self-only" => Ok(Self::SelfOnly),
            "cross-only" => Ok(Self::CrossOnly),
            "no-attention" => Ok(Self::NoAttention),
            other => Err(Error::config(format!("unknown attention arm '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::SelfOnly => "self-only",
            Self::CrossOnly => "cross-only",
            Self::NoAttention => "no-attention",
        }
    }
}

fn act(x: &Tensor) -> Result<Tensor> {
    leaky_relu(x, SLOPE)
}

/// Query/key/value token batches of one modality, shaped
/// (windows·heads, tokens, head_dim).
pub struct AttentionTokens {
    pub q: Tensor,
    pub k: Tensor,
    pub v: Tensor,
}

/// Rearranges (1, C, H, W) into (windows·heads, p², C/heads) token batches.
fn window_partition(x: &Tensor, p: usize, heads: usize) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    if n != 1 {
        return Err(Error::shape("window partition expects a single image"));
    }
    if h % p != 0 || w % p != 0 || c % heads != 0 {
        return Err(Error::shape(format!(
            "feature map {c}x{h}x{w} incompatible with window {p} / {heads} heads"
        )));
    }
    let d = c / heads;
    // (1,C,H,W) -> (heads, d, H/p, p, W/p, p) -> (H/p, W/p, heads, p, p, d)
    let x = x.reshape((heads, d, h / p, p, w / p, p))?;
    let x = x.permute([2, 4, 0, 3, 5, 1])?.contiguous()?;
    Ok(x.reshape(((h / p) * (w / p) * heads, p * p, d))?)
}

/// Inverse of [`window_partition`].
fn window_unpartition(x: &Tensor, p: usize, heads: usize, h: usize, w: usize) -> Result<Tensor> {
    let (_, _, d) = x.dims3()?;
    let x = x.reshape((h / p, w / p, heads, p, p, d))?;
    let x = x.permute([2, 5, 0, 3, 1, 4])?.contiguous()?;
    Ok(x.reshape((1, heads * d, h, w))?)
}

/// Row-stochastic attention matrix softmax(Q Kᵀ / √d).
pub fn attention_matrix(q: &Tensor, k: &Tensor) -> Result<Tensor> {
    let d = q.dims3()?.2 as f64;
    let scores = (q.matmul(&k.transpose(1, 2)?)? / d.sqrt())?;
    Ok(softmax(&scores, candle_core::D::Minus1)?)
}

fn attention_read(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    Ok(attention_matrix(q, k)?.matmul(v)?)
}

/// Joint self- plus cross-attention: each modality's queries read from both
/// key/value sets and the two reads are summed.
pub fn joint_attention(
    tokens_v: &AttentionTokens,
    tokens_n: &AttentionTokens,
) -> Result<(Tensor, Tensor)> {
    if tokens_v.q.dims() != tokens_n.q.dims() {
        return Err(Error::shape(format!(
            "modality token shapes differ: {:?} vs {:?}",
            tokens_v.q.dims(),
            tokens_n.q.dims()
        )));
    }
    let f_v = (attention_read(&tokens_v.q, &tokens_v.k, &tokens_v.v)?
        + attention_read(&tokens_v.q, &tokens_n.k, &tokens_n.v)?)?;
    let f_n = (attention_read(&tokens_n.q, &tokens_n.k, &tokens_n.v)?
        + attention_read(&tokens_n.q, &tokens_v.k, &tokens_v.v)?)?;
    Ok((f_v, f_n))
}

/// Two-layer strided stem; returns a half-resolution skip and the quarter-
/// resolution attention features.
pub struct FusionStem {
    c1: Conv2d,
    c2: Conv2d,
}

impl FusionStem {
    pub fn new(store: &mut ParamStore, name: &str, in_c: usize) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(store, &format!("{name}.c1"), in_c, 16, 3, 2, 1, true)?,
            c2: Conv2d::new(store, &format!("{name}.c2"), 16, FEATURE_CHANNELS, 3, 2, 1, true)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let skip = act(&instance_norm(&self.c1.forward(x)?, IN_EPS)?)?;
        let feat = act(&instance_norm(&self.c2.forward(&skip)?, IN_EPS)?)?;
        Ok((skip, feat))
    }
}

/// Bias-free 1×1 query/key/value projections for one modality.
pub struct QkvProjection {
    q: Conv2d,
    k: Conv2d,
    v: Conv2d,
}

impl QkvProjection {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        let c = FEATURE_CHANNELS;
        Ok(Self {
            q: Conv2d::new(store, &format!("{name}.q"), c, c, 1, 1, 0, false)?,
            k: Conv2d::new(store, &format!("{name}.k"), c, c, 1, 1, 0, false)?,
            v: Conv2d::new(store, &format!("{name}.v"), c, c, 1, 1, 0, false)?,
        })
    }

    pub fn forward(&self, features: &Tensor) -> Result<AttentionTokens> {
        Ok(AttentionTokens {
            q: window_partition(&self.q.forward(features)?, WINDOW, HEADS)?,
            k: window_partition(&self.k.forward(features)?, WINDOW, HEADS)?,
            v: window_partition(&self.v.forward(features)?, WINDOW, HEADS)?,
        })
    }
}

/// Decoder from fused features plus both stem skips to the fused image.
pub struct FusionDecoder {
    c1: Conv2d,
    c2: Conv2d,
    c3: Conv2d,
    head: Conv2d,
}

impl FusionDecoder {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(store, &format!("{name}.c1"), 2 * FEATURE_CHANNELS, 32, 3, 1, 1, true)?,
            c2: Conv2d::new(store, &format!("{name}.c2"), 32 + 32, 24, 3, 1, 1, true)?,
            c3: Conv2d::new(store, &format!("{name}.c3"), 24, 16, 3, 1, 1, true)?,
            head: Conv2d::new(store, &format!("{name}.head"), 16, 3, 3, 1, 1, true)?,
        })
    }

    pub fn forward(&self, f_v: &Tensor, f_n: &Tensor, skip_v: &Tensor, skip_n: &Tensor) -> Result<Tensor> {
        let y = Tensor::cat(&[f_v, f_n], 1)?;
        let y = upsample2(&act(&instance_norm(&self.c1.forward(&y)?, IN_EPS)?)?)?;
        let y = Tensor::cat(&[&y, skip_v, skip_n], 1)?;
        let y = upsample2(&act(&instance_norm(&self.c2.forward(&y)?, IN_EPS)?)?)?;
        let y = act(&self.c3.forward(&y)?)?;
        Ok(sigmoid(&self.head.forward(&y)?)?)
    }
}

/// The full visual fusion module.
pub struct FusionModule {
    stem_v: FusionStem,
    stem_n: FusionStem,
    proj_v: QkvProjection,
    proj_n: QkvProjection,
    decoder: FusionDecoder,
    pub arm: AttentionArm,
}

impl FusionModule {
    pub fn new(store: &mut ParamStore, arm: AttentionArm) -> Result<Self> {
        Ok(Self {
            stem_v: FusionStem::new(store, "fusion.stem_v", 3)?,
            stem_n: FusionStem::new(store, "fusion.stem_n", 1)?,
            proj_v: QkvProjection::new(store, "fusion.proj_v")?,
            proj_n: QkvProjection::new(store, "fusion.proj_n")?,
            decoder: FusionDecoder::new(store, "fusion.dec")?,
            arm,
        })
    }

    /// Fused feature maps at quarter resolution under the configured arm.
    /// Attention reads are added residually onto the stem features.
    fn attend(&self, feat_v: &Tensor, feat_n: &Tensor) -> Result<(Tensor, Tensor)> {
        if self.arm == AttentionArm::NoAttention {
            return Ok((feat_v.clone(), feat_n.clone()));
        }
        let (_, _, h, w) = feat_v.dims4()?;
        let tv = self.proj_v.forward(feat_v)?;
        let tn = self.proj_n.forward(feat_n)?;
        let (f_v, f_n) = match self.arm {
            AttentionArm::Joint => joint_attention(&tv, &tn)?,
            AttentionArm::SelfOnly => (
                attention_read(&tv.q, &tv.k, &tv.v)?,
                attention_read(&tn.q, &tn.k, &tn.v)?,
            ),
            AttentionArm::CrossOnly => (
                attention_read(&tv.q, &tn.k, &tn.v)?,
                attention_read(&tn.q, &tv.k, &tv.v)?,
            ),
            AttentionArm::NoAttention => unreachable!(),
        };
        Ok((
            (feat_v + window_unpartition(&f_v, WINDOW, HEADS, h, w)?)?,
            (feat_n + window_unpartition(&f_n, WINDOW, HEADS, h, w)?)?,
        ))
    }

    /// Fused image O_VF in [0,1] at input resolution.
    pub fn forward(&self, vis: &Tensor, nir: &Tensor) -> Result<Tensor> {
        let (_, _, h, w) = vis.dims4()?;
        if nir.dims4()?.2 != h || nir.dims4()?.3 != w {
            return Err(Error::shape("visible and NIR inputs differ in size"));
        }
        if h % (4 * WINDOW) != 0 || w % (4 * WINDOW) != 0 {
            return Err(Error::shape(format!(
                "input {h}x{w} must be divisible by {}",
                4 * WINDOW
            )));
        }
        let (skip_v, feat_v) = self.stem_v.forward(vis)?;
        let (skip_n, feat_n) = self.stem_n.forward(nir)?;
        let (f_v, f_n) = self.attend(&feat_v, &feat_n)?;
        self.decoder.forward(&f_v, &f_n, &skip_v, &skip_n)
    }
}

/// Largest odd SSIM window that fits the image, capped at the standard 11.
fn ssim_window(h: usize, w: usize) -> usize {
    let m = 11.min(h.min(w));
    if m % 2 == 0 {
        m - 1
    } else {
        m
    }
}

/// [1 − SSIM(O, I_V)] + [1 − SSIM(O, I_N)], NIR replicated to 3 channels.
pub fn ssim_loss(o: &Tensor, i_v: &Tensor, i_n: &Tensor) -> Result<Tensor> {
    let (_, c, h, w) = o.dims4()?;
    let win = ssim_window(h, w);
    let i_n = broadcast_channels(i_n, c)?;
    let s_v = ssim_mean(o, i_v, win)?;
    let s_n = ssim_mean(o, &i_n, win)?;
    Ok(((s_v + s_n)?.neg()? + 2.0)?)
}

/// L1 between |∇O| and max(|∇I_V|, |∇I_N|), Sobel gradients, mean over
/// all pixels and channels.
pub fn texture_loss(o: &Tensor, i_v: &Tensor, i_n: &Tensor) -> Result<Tensor> {
    let (_, c, _, _) = o.dims4()?;
    let i_n = broadcast_channels(i_n, c)?;
    let g_o = gradient_magnitude(o)?;
    let target = gradient_magnitude(i_v)?.maximum(&gradient_magnitude(&i_n)?)?;
    mean_l1(&g_o, &target)
}

/// Mean absolute deviation of O from the elementwise maximum of the inputs.
pub fn intensity_loss(o: &Tensor, i_v: &Tensor, i_n: &Tensor) -> Result<Tensor> {
    let (_, c, _, _) = o.dims4()?;
    let i_n = broadcast_channels(i_n, c)?;
    mean_l1(o, &i_v.maximum(&i_n)?)
}

/// Unweighted sum of the SSIM, texture, and intensity terms.
pub fn fusion_loss(o: &Tensor, i_v: &Tensor, i_n: &Tensor) -> Result<Tensor> {
    Ok(((ssim_loss(o, i_v, i_n)? + texture_loss(o, i_v, i_n)?)? + intensity_loss(o, i_v, i_n)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device, Tensor};

    fn dev() -> Device {
        Device::Cpu
    }

    fn rand_t(seed: u64, shape: (usize, usize, usize, usize)) -> Tensor {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = shape.0 * shape.1 * shape.2 * shape.3;
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        Tensor::from_vec(data, shape, &dev()).unwrap()
    }

    fn module(arm: AttentionArm) -> FusionModule {
        let mut store = ParamStore::new(17, DType::F64);
        FusionModule::new(&mut store, arm).unwrap()
    }

    #[test]
    fn window_partition_roundtrip_and_token_counts() {
        let x = rand_t(1, (1, FEATURE_CHANNELS, 16, 16));
        let tokens = window_partition(&x, WINDOW, HEADS).unwrap();
        // 2x2 windows x 2 heads, 64 tokens each, head dim 16.
        assert_eq!(tokens.dims(), &[8, 64, FEATURE_CHANNELS / HEADS]);
        let back = window_unpartition(&tokens, WINDOW, HEADS, 16, 16).unwrap();
        let a: Vec<f64> = x.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f64> = back.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_features_give_zero_tokens() {
        let mut store = ParamStore::new(3, DType::F64);
        let proj = QkvProjection::new(&mut store, "p").unwrap();
        let zeros = Tensor::zeros((1, FEATURE_CHANNELS, 16, 16), DType::F64, &dev()).unwrap();
        let t = proj.forward(&zeros).unwrap();
        for x in [&t.q, &t.k, &t.v] {
            let s: f64 = x.abs().unwrap().sum_all().unwrap().to_scalar().unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn single_token_joint_attention_hand_value() {
        let one = Tensor::from_vec(vec![1.0f64], (1, 1, 1), &dev()).unwrap();
        let t = |x: &Tensor| AttentionTokens { q: x.clone(), k: x.clone(), v: x.clone() };
        let (f_v, f_n) = joint_attention(&t(&one), &t(&one)).unwrap();
        let v: f64 = f_v.flatten_all().unwrap().to_vec1::<f64>().unwrap()[0];
        assert!((v - 2.0).abs() < 1e-12);
        let n: f64 = f_n.flatten_all().unwrap().to_vec1::<f64>().unwrap()[0];
        assert!((n - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_modalities_fuse_symmetrically() {
        let t = AttentionTokens {
            q: rand_t(4, (1, 16, 8, 1)).reshape((1, 16, 8)).unwrap(),
            k: rand_t(5, (1, 16, 8, 1)).reshape((1, 16, 8)).unwrap(),
            v: rand_t(6, (1, 16, 8, 1)).reshape((1, 16, 8)).unwrap(),
        };
        let t2 = AttentionTokens { q: t.q.clone(), k: t.k.clone(), v: t.v.clone() };
        let (f_v, f_n) = joint_attention(&t, &t2).unwrap();
        let a: Vec<f64> = f_v.flatten_all().unwrap().to_vec1().unwrap();
        let b: Vec<f64> = f_n.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(a, b);
        // And equal to twice the self-attention read.
        let selfread = attention_read(&t.q, &t.k, &t.v).unwrap();
        let twice: Vec<f64> = (selfread * 2.0).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        for (x, y) in a.iter().zip(&twice) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_rows_are_stochastic() {
        let q = rand_t(7, (2, 16, 8, 1)).reshape((2, 16, 8)).unwrap();
        let k = rand_t(8, (2, 16, 8, 1)).reshape((2, 16, 8)).unwrap();
        let m = attention_matrix(&q, &k).unwrap();
        let sums: Vec<f64> = m
            .sum(candle_core::D::Minus1)
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-5));
    }

    #[test]
    fn fused_image_shape_range_determinism() {
        for arm in [
            AttentionArm::Joint,
            AttentionArm::SelfOnly,
            AttentionArm::CrossOnly,
            AttentionArm::NoAttention,
        ] {
            let m = module(arm);
            let vis = rand_t(9, (1, 3, 64, 64));
            let nir = rand_t(10, (1, 1, 64, 64));
            let o1 = m.forward(&vis, &nir).unwrap();
            let o2 = m.forward(&vis, &nir).unwrap();
            assert_eq!(o1.dims(), &[1, 3, 64, 64]);
            let v1: Vec<f64> = o1.flatten_all().unwrap().to_vec1().unwrap();
            let v2: Vec<f64> = o2.flatten_all().unwrap().to_vec1().unwrap();
            assert_eq!(v1, v2);
            assert!(v1.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn ssim_loss_zero_at_identity_and_symmetric() {
        let o = rand_t(11, (1, 3, 32, 32));
        let z: f64 = ssim_loss(&o, &o, &o).unwrap().to_scalar().unwrap();
        assert!(z.abs() < 1e-9);

        let i_v = rand_t(12, (1, 3, 32, 32));
        let i_n = rand_t(13, (1, 3, 32, 32));
        let a: f64 = ssim_loss(&o, &i_v, &i_n).unwrap().to_scalar().unwrap();
        let b: f64 = ssim_loss(&o, &i_n, &i_v).unwrap().to_scalar().unwrap();
        assert!((a - b).abs() < 1e-12);
        // Independent noise scores near 2 (two nearly-zero SSIMs).
        assert!(a > 1.5 && a < 2.5, "noise ssim loss {a}");
    }

    #[test]
    fn texture_loss_matches_brute_force_oracle() {
        let o = rand_t(14, (1, 1, 4, 4));
        let i_v = rand_t(15, (1, 1, 4, 4));
        let i_n = rand_t(16, (1, 1, 4, 4));
        let got: f64 = texture_loss(&o, &i_v, &i_n).unwrap().to_scalar().unwrap();

        let grid = |t: &Tensor| -> Vec<f64> { t.flatten_all().unwrap().to_vec1().unwrap() };
        let sobel_mag = |img: &[f64]| -> Vec<f64> {
            let reflect = |i: isize| -> usize {
                let n = 4isize;
                let i = if i < 0 { -i } else if i >= n { 2 * n - 2 - i } else { i };
                i as usize
            };
            let at = |y: isize, x: isize| img[reflect(y) * 4 + reflect(x)];
            let mut out = vec![0.0; 16];
            for y in 0..4isize {
                for x in 0..4isize {
                    let gx = -at(y - 1, x - 1) + at(y - 1, x + 1) - 2.0 * at(y, x - 1)
                        + 2.0 * at(y, x + 1)
                        - at(y + 1, x - 1)
                        + at(y + 1, x + 1);
                    let gy = -at(y - 1, x - 1) - 2.0 * at(y - 1, x) - at(y - 1, x + 1)
                        + at(y + 1, x - 1)
                        + 2.0 * at(y + 1, x)
                        + at(y + 1, x + 1);
                    out[(y * 4 + x) as usize] = (gx * gx + gy * gy + 1e-12).sqrt();
                }
            }
            out
        };
        let go = sobel_mag(&grid(&o));
        let gv = sobel_mag(&grid(&i_v));
        let gn = sobel_mag(&grid(&i_n));
        let expect: f64 =
            (0..16).map(|i| (go[i] - gv[i].max(gn[i])).abs()).sum::<f64>() / 16.0;
        assert!((got - expect).abs() < 1e-9, "got {got} expect {expect}");
    }

    #[test]
    fn texture_loss_zero_for_constant_and_identity() {
        let c = Tensor::full(0.4f64, (1, 3, 16, 16), &dev()).unwrap();
        let z: f64 = texture_loss(&c, &c, &c).unwrap().to_scalar().unwrap();
        assert!(z < 1e-6);
        let o = rand_t(17, (1, 3, 16, 16));
        let z: f64 = texture_loss(&o, &o, &o).unwrap().to_scalar().unwrap();
        assert!(z < 1e-12);
    }

    #[test]
    fn intensity_loss_hand_value() {
        let f = |v: f64| Tensor::full(v, (1, 3, 8, 8), &dev()).unwrap();
        let l: f64 = intensity_loss(&f(0.3), &f(0.2), &f(0.5)).unwrap().to_scalar().unwrap();
        assert!((l - 0.2).abs() < 1e-12);
        let z: f64 = intensity_loss(&f(0.5), &f(0.2), &f(0.5)).unwrap().to_scalar().unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn fusion_loss_is_sum_of_components() {
        let o = rand_t(18, (1, 3, 32, 32));
        let i_v = rand_t(19, (1, 3, 32, 32));
        let i_n = rand_t(20, (1, 1, 32, 32));
        let total: f64 = fusion_loss(&o, &i_v, &i_n).unwrap().to_scalar().unwrap();
        let parts: f64 = ssim_loss(&o, &i_v, &i_n).unwrap().to_scalar::<f64>().unwrap()
            + texture_loss(&o, &i_v, &i_n).unwrap().to_scalar::<f64>().unwrap()
            + intensity_loss(&o, &i_v, &i_n).unwrap().to_scalar::<f64>().unwrap();
        assert!((total - parts).abs() < 1e-12);

        let z: f64 = fusion_loss(&o, &o, &o).unwrap().to_scalar().unwrap();
        assert!(z.abs() < 1e-9);
    }

    #[test]
    fn fusion_loss_gradient_matches_finite_differences() {
        let o = candle_core::Var::from_tensor(&rand_t(21, (1, 1, 8, 8))).unwrap();
        let i_v = rand_t(22, (1, 1, 8, 8));
        let i_n = rand_t(23, (1, 1, 8, 8));
        let loss = fusion_loss(o.as_tensor(), &i_v, &i_n).unwrap();
        let grads = loss.backward().unwrap();
        let ga: Vec<f64> = grads
            .get(o.as_tensor())
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        let base: Vec<f64> = o.flatten_all().unwrap().to_vec1().unwrap();
        let eps = 1e-6;
        for i in [0usize, 27, 63] {
            let f = |data: Vec<f64>| -> f64 {
                let t = Tensor::from_vec(data, (1, 1, 8, 8), &dev()).unwrap();
                fusion_loss(&t, &i_v, &i_n).unwrap().to_scalar().unwrap()
            };
            let mut plus = base.clone();
            plus[i] += eps;
            let mut minus = base.clone();
            minus[i] -= eps;
            let num = (f(plus) - f(minus)) / (2.0 * eps);
            assert!(
                (ga[i] - num).abs() / num.abs().max(1e-6) < 1e-4,
                "grad {i}: analytic {} vs numeric {num}",
                ga[i]
            );
        }
    }
}
