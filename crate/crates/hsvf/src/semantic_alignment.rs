//! Intrinsic semantic alignment: each modality is split into a global style
//! code and a modality-invariant content map, a shared decoder predicts
//! segmentation from content, and the contents are tied together by a
//! consistency loss plus cross-modal image reconstruction.

use candle_core::Tensor;
use candle_nn::ops::{sigmoid, softmax};

use crate::data_model::{SemanticMask, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::ops::{global_avg, instance_norm, leaky_relu, mean_l1, upsample2};
use crate::nn::{mask_to_onehot, Conv2d, Linear, ParamStore};
use crate::scene_synthesis::Modality;

pub const CONTENT_CHANNELS: usize = 16;
pub const STYLE_DIM: usize = 64;
const SLOPE: f64 = 0.2;
const IN_EPS: f64 = 1e-5;
const PROB_CLAMP: f64 = 1e-8;

fn act(x: &Tensor) -> Result<Tensor> {
    leaky_relu(x, SLOPE)
}

/// Outputs of the two encoders for one modality.
pub struct FeatureBundle {
    pub content: Tensor,
    pub style: Tensor,
    pub modality: Modality,
}

/// Content encoder: a strided trunk with a persistent full-resolution branch
/// whose pooled features are fused back in at H/4.
pub struct ContentEncoder {
    stem: Conv2d,
    hr: Conv2d,
    down1: Conv2d,
    down2: Conv2d,
    fuse: Conv2d,
}

impl ContentEncoder {
    pub fn new(store: &mut ParamStore, name: &str, in_c: usize) -> Result<Self> {
        Ok(Self {
            stem: Conv2d::new(store, &format!("{name}.stem"), in_c, 16, 3, 1, 1, true)?,
            hr: Conv2d::new(store, &format!("{name}.hr"), 16, 16, 3, 1, 1, true)?,
            down1: Conv2d::new(store, &format!("{name}.down1"), 16, 24, 3, 2, 1, true)?,
            down2: Conv2d::new(store, &format!("{name}.down2"), 24, 32, 3, 2, 1, true)?,
            fuse: Conv2d::new(store, &format!("{name}.fuse"), 48, CONTENT_CHANNELS, 1, 1, 0, true)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (_, _, h, w) = x.dims4()?;
        if h % 4 != 0 || w % 4 != 0 {
            return Err(Error::shape(format!(
                "content encoder needs spatial size divisible by 4, got {h}x{w}"
            )));
        }
        let s = act(&instance_norm(&self.stem.forward(x)?, IN_EPS)?)?;
        let hr = act(&self.hr.forward(&s)?)?;
        let d1 = act(&instance_norm(&self.down1.forward(&s)?, IN_EPS)?)?;
        let d2 = act(&instance_norm(&self.down2.forward(&d1)?, IN_EPS)?)?;
        let hr_pooled = hr.avg_pool2d(4)?;
        let cat = Tensor::cat(&[&d2, &hr_pooled], 1)?;
        self.fuse.forward(&cat)
    }
}

/// Style encoder: four stride-2 convolutions followed by global averaging
/// into a single vector per image.
pub struct StyleEncoder {
    layers: Vec<Conv2d>,
}

impl StyleEncoder {
    pub fn new(store: &mut ParamStore, name: &str, in_c: usize) -> Result<Self> {
        let widths = [in_c, 16, 32, 48, STYLE_DIM];
        let mut layers = Vec::new();
        for i in 0..4 {
            layers.push(Conv2d::new(
                store,
                &format!("{name}.c{i}"),
                widths[i],
                widths[i + 1],
                3,
                2,
                1,
                true,
            )?);
        }
        Ok(Self { layers })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (_, _, h, w) = x.dims4()?;
        if h % 16 != 0 || w % 16 != 0 {
            return Err(Error::shape(format!(
                "style encoder needs spatial size divisible by 16, got {h}x{w}"
            )));
        }
        let mut y = x.clone();
        for layer in &self.layers {
            y = act(&layer.forward(&y)?)?;
        }
        global_avg(&y)
    }
}

/// Shared segmentation decoder: content at H/4 up to full-resolution logits.
pub struct SegDecoder {
    c1: Conv2d,
    c2: Conv2d,
    head: Conv2d,
}

impl SegDecoder {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(store, &format!("{name}.c1"), CONTENT_CHANNELS, 24, 3, 1, 1, true)?,
            c2: Conv2d::new(store, &format!("{name}.c2"), 24, 16, 3, 1, 1, true)?,
            head: Conv2d::new(store, &format!("{name}.head"), 16, NUM_CLASSES, 3, 1, 1, true)?,
        })
    }

    pub fn forward(&self, content: &Tensor) -> Result<Tensor> {
        let y = upsample2(&act(&instance_norm(&self.c1.forward(content)?, IN_EPS)?)?)?;
        let y = upsample2(&act(&instance_norm(&self.c2.forward(&y)?, IN_EPS)?)?)?;
        self.head.forward(&y)
    }
}

/// Style-modulated layer: instance norm followed by a scale/shift predicted
/// from the style vector (AdaIN).
struct StyleMod {
    map: Linear,
    channels: usize,
}

impl StyleMod {
    fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self { map: Linear::new(store, name, STYLE_DIM, 2 * channels, true)?, channels })
    }

    fn forward(&self, x: &Tensor, style: &Tensor) -> Result<Tensor> {
        let n = x.dim(0)?;
        let params = self.map.forward(style)?; // (N, 2C)
        let gamma = params.narrow(1, 0, self.channels)?.reshape((n, self.channels, 1, 1))?;
        let beta = params
            .narrow(1, self.channels, self.channels)?
            .reshape((n, self.channels, 1, 1))?;
        let y = instance_norm(x, IN_EPS)?;
        Ok(y.broadcast_mul(&(gamma + 1.0)?)?.broadcast_add(&beta)?)
    }
}

/// Per-modality image decoder: content modulated by the target style, two
/// upsampling stages, sigmoid output.
pub struct ImageDecoder {
    c1: Conv2d,
    m1: StyleMod,
    c2: Conv2d,
    m2: StyleMod,
    head: Conv2d,
}

impl ImageDecoder {
    pub fn new(store: &mut ParamStore, name: &str, out_c: usize) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(store, &format!("{name}.c1"), CONTENT_CHANNELS, 24, 3, 1, 1, true)?,
            m1: StyleMod::new(store, &format!("{name}.m1"), 24)?,
            c2: Conv2d::new(store, &format!("{name}.c2"), 24, 16, 3, 1, 1, true)?,
            m2: StyleMod::new(store, &format!("{name}.m2"), 16)?,
            head: Conv2d::new(store, &format!("{name}.head"), 16, out_c, 3, 1, 1, true)?,
        })
    }

    pub fn forward(&self, style: &Tensor, content: &Tensor) -> Result<Tensor> {
        let y = upsample2(&act(&self.m1.forward(&self.c1.forward(content)?, style)?)?)?;
        let y = upsample2(&act(&self.m2.forward(&self.c2.forward(&y)?, style)?)?)?;
        Ok(sigmoid(&self.head.forward(&y)?)?)
    }
}

/// All parameters of the alignment stage: per-modality content/style
/// encoders and image decoders plus the shared segmentation decoder.
pub struct AlignmentModule {
    content_vis: ContentEncoder,
    content_nir: ContentEncoder,
    style_vis: StyleEncoder,
    style_nir: StyleEncoder,
    seg: SegDecoder,
    dec_vis: ImageDecoder,
    dec_nir: ImageDecoder,
}

impl AlignmentModule {
    pub fn new(store: &mut ParamStore) -> Result<Self> {
        Ok(Self {
            content_vis: ContentEncoder::new(store, "align.content_vis", 3)?,
            content_nir: ContentEncoder::new(store, "align.content_nir", 1)?,
            style_vis: StyleEncoder::new(store, "align.style_vis", 3)?,
            style_nir: StyleEncoder::new(store, "align.style_nir", 1)?,
            seg: SegDecoder::new(store, "align.seg")?,
            dec_vis: ImageDecoder::new(store, "align.dec_vis", 3)?,
            dec_nir: ImageDecoder::new(store, "align.dec_nir", 1)?,
        })
    }

    pub fn encode_content(&self, image: &Tensor, modality: Modality) -> Result<Tensor> {
        match modality {
            Modality::Vis => self.content_vis.forward(image),
            Modality::Nir => self.content_nir.forward(image),
        }
    }

    pub fn encode_style(&self, image: &Tensor, modality: Modality) -> Result<Tensor> {
        match modality {
            Modality::Vis => self.style_vis.forward(image),
            Modality::Nir => self.style_nir.forward(image),
        }
    }

    pub fn encode(&self, image: &Tensor, modality: Modality) -> Result<FeatureBundle> {
        Ok(FeatureBundle {
            content: self.encode_content(image, modality)?,
            style: self.encode_style(image, modality)?,
            modality,
        })
    }

    pub fn decode_segmentation(&self, content: &Tensor) -> Result<Tensor> {
        self.seg.forward(content)
    }

    pub fn decode_image(
        &self,
        style: &Tensor,
        content: &Tensor,
        target: Modality,
    ) -> Result<Tensor> {
        match target {
            Modality::Vis => self.dec_vis.forward(style, content),
            Modality::Nir => self.dec_nir.forward(style, content),
        }
    }
}

/// Mean absolute difference between the two content maps.
pub fn content_alignment_loss(c_v: &Tensor, c_n: &Tensor) -> Result<Tensor> {
    mean_l1(c_v, c_n)
}

/// Ignore-aware cross-entropy against the shared ground truth, one term per
/// modality branch, averaged over the non-ignore pixels of each.
pub fn segmentation_loss(logits_v: &Tensor, logits_n: &Tensor, gt: &SemanticMask) -> Result<Tensor> {
    let (onehot, valid) = mask_to_onehot(gt, logits_v.dtype(), logits_v.device())?;
    let count: f64 = valid.to_dtype(candle_core::DType::F64)?.sum_all()?.to_scalar()?;
    if count == 0.0 {
        return Err(Error::data("segmentation loss: every pixel carries the ignore label"));
    }
    let branch = |logits: &Tensor| -> Result<Tensor> {
        if logits.dims() != onehot.dims() {
            return Err(Error::shape(format!(
                "logits shape {:?} does not match mask {}x{}",
                logits.dims(),
                gt.height(),
                gt.width()
            )));
        }
        let p = softmax(logits, 1)?.maximum(PROB_CLAMP)?;
        let nll = (p.log()?.neg()? * &onehot)?.sum_keepdim(1)?;
        Ok(((nll * &valid)?.sum_all()? / count)?)
    };
    Ok((branch(logits_v)? + branch(logits_n)?)?)
}

/// Cross-modal reconstruction: each modality is rebuilt from its own style
/// and the other modality's content.
pub fn reconstruction_losses(
    module: &AlignmentModule,
    vis: &Tensor,
    nir: &Tensor,
    bundle_vis: &FeatureBundle,
    bundle_nir: &FeatureBundle,
) -> Result<(Tensor, Tensor)> {
    let rec_vis = module.decode_image(&bundle_vis.style, &bundle_nir.content, Modality::Vis)?;
    let rec_nir = module.decode_image(&bundle_nir.style, &bundle_vis.content, Modality::Nir)?;
    Ok((mean_l1(&rec_vis, vis)?, mean_l1(&rec_nir, nir)?))
}

/// Unweighted sum of the four alignment terms.
pub fn alignment_total_loss(
    content: &Tensor,
    seg: &Tensor,
    rec_vis: &Tensor,
    rec_nir: &Tensor,
) -> Result<Tensor> {
    Ok((((content + seg)? + rec_vis)? + rec_nir)?)
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

    fn module() -> AlignmentModule {
        let mut store = ParamStore::new(11, DType::F64);
        AlignmentModule::new(&mut store).unwrap()
    }

    #[test]
    fn shape_contracts_hold() {
        let m = module();
        let vis = rand_t(1, (1, 3, 64, 64));
        let nir = rand_t(2, (1, 1, 64, 64));
        let cv = m.encode_content(&vis, Modality::Vis).unwrap();
        let cn = m.encode_content(&nir, Modality::Nir).unwrap();
        assert_eq!(cv.dims(), &[1, CONTENT_CHANNELS, 16, 16]);
        assert_eq!(cn.dims(), &[1, CONTENT_CHANNELS, 16, 16]);
        let sv = m.encode_style(&vis, Modality::Vis).unwrap();
        assert_eq!(sv.dims(), &[1, STYLE_DIM]);
        let logits = m.decode_segmentation(&cv).unwrap();
        assert_eq!(logits.dims(), &[1, NUM_CLASSES, 64, 64]);
        let rec = m.decode_image(&sv, &cn, Modality::Vis).unwrap();
        assert_eq!(rec.dims(), &[1, 3, 64, 64]);
    }

    #[test]
    fn encoders_are_deterministic_and_reject_bad_sizes() {
        let m = module();
        let vis = rand_t(3, (1, 3, 64, 64));
        let a = m.encode_content(&vis, Modality::Vis).unwrap();
        let b = m.encode_content(&vis, Modality::Vis).unwrap();
        let va: Vec<f64> = a.flatten_all().unwrap().to_vec1().unwrap();
        let vb: Vec<f64> = b.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(va, vb);
        let bad = rand_t(4, (1, 3, 30, 30));
        assert!(m.encode_content(&bad, Modality::Vis).is_err());
        assert!(m.encode_style(&bad, Modality::Vis).is_err());
    }

    #[test]
    fn decoded_image_stays_in_unit_range() {
        let m = module();
        let nir = rand_t(5, (1, 1, 64, 64));
        let bundle = m.encode(&nir, Modality::Nir).unwrap();
        let rec = m.decode_image(&bundle.style, &bundle.content, Modality::Vis).unwrap();
        let v: Vec<f64> = rec.flatten_all().unwrap().to_vec1().unwrap();
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn segmentation_softmax_sums_to_one() {
        let m = module();
        let c = rand_t(6, (1, CONTENT_CHANNELS, 16, 16));
        let logits = m.decode_segmentation(&c).unwrap();
        let p = softmax(&logits, 1).unwrap();
        let sums: Vec<f64> = p.sum(1).unwrap().flatten_all().unwrap().to_vec1().unwrap();
        assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-5));
    }

    #[test]
    fn content_loss_hand_values() {
        let a = Tensor::from_vec(vec![1.0f64, 2.0], (1, 1, 1, 2), &dev()).unwrap();
        let b = Tensor::from_vec(vec![2.0f64, 4.0], (1, 1, 1, 2), &dev()).unwrap();
        let l: f64 = content_alignment_loss(&a, &b).unwrap().to_scalar().unwrap();
        assert!((l - 1.5).abs() < 1e-12);
        let zero: f64 = content_alignment_loss(&a, &a).unwrap().to_scalar().unwrap();
        assert_eq!(zero, 0.0);
        let shifted = (&a + 0.3).unwrap();
        let k: f64 = content_alignment_loss(&a, &shifted).unwrap().to_scalar().unwrap();
        assert!((k - 0.3).abs() < 1e-12);
    }

    #[test]
    fn segmentation_loss_hand_values() {
        let gt = SemanticMask::new(16, 16, vec![2u8; 256]).unwrap();
        let uniform = Tensor::zeros((1, NUM_CLASSES, 16, 16), DType::F64, &dev()).unwrap();
        let l: f64 = segmentation_loss(&uniform, &uniform, &gt).unwrap().to_scalar().unwrap();
        assert!((l - 2.0 * (6.0f64).ln()).abs() < 1e-9, "uniform branches: {l}");

        // One branch puts p=0.25 on the true class (others 0.15 each), the
        // other is effectively perfect.
        let mut quarter = vec![0.0f64; NUM_CLASSES * 256];
        let mut perfect = vec![0.0f64; NUM_CLASSES * 256];
        for i in 0..256 {
            for c in 0..NUM_CLASSES {
                let p: f64 = if c == 2 { 0.25 } else { 0.15 };
                quarter[c * 256 + i] = p.ln();
                perfect[c * 256 + i] = if c == 2 { 60.0 } else { 0.0 };
            }
        }
        let quarter = Tensor::from_vec(quarter, (1, NUM_CLASSES, 16, 16), &dev()).unwrap();
        let perfect = Tensor::from_vec(perfect, (1, NUM_CLASSES, 16, 16), &dev()).unwrap();
        let l: f64 = segmentation_loss(&quarter, &perfect, &gt).unwrap().to_scalar().unwrap();
        assert!((l - (4.0f64).ln()).abs() < 1e-6, "quarter+perfect: {l}");
    }

    #[test]
    fn segmentation_loss_ignores_ignore_and_rejects_empty() {
        let mut labels = vec![2u8; 256];
        for l in labels.iter_mut().take(128) {
            *l = crate::data_model::IGNORE_LABEL;
        }
        let gt = SemanticMask::new(16, 16, labels).unwrap();
        let uniform = Tensor::zeros((1, NUM_CLASSES, 16, 16), DType::F64, &dev()).unwrap();
        let l: f64 = segmentation_loss(&uniform, &uniform, &gt).unwrap().to_scalar().unwrap();
        assert!((l - 2.0 * (6.0f64).ln()).abs() < 1e-9);

        let all = SemanticMask::new(16, 16, vec![crate::data_model::IGNORE_LABEL; 256]).unwrap();
        assert!(segmentation_loss(&uniform, &uniform, &all).is_err());
    }

    #[test]
    fn reconstruction_losses_match_mean_l1_oracle() {
        let m = module();
        let vis = rand_t(7, (1, 3, 64, 64));
        let nir = rand_t(8, (1, 1, 64, 64));
        let bv = m.encode(&vis, Modality::Vis).unwrap();
        let bn = m.encode(&nir, Modality::Nir).unwrap();
        let (lv, ln_) = reconstruction_losses(&m, &vis, &nir, &bv, &bn).unwrap();
        let rec_vis = m.decode_image(&bv.style, &bn.content, Modality::Vis).unwrap();
        let expect: f64 = (rec_vis - &vis)
            .unwrap()
            .abs()
            .unwrap()
            .mean_all()
            .unwrap()
            .to_scalar()
            .unwrap();
        let got: f64 = lv.to_scalar().unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!(ln_.to_scalar::<f64>().unwrap() >= 0.0);
    }

    #[test]
    fn total_loss_is_plain_sum() {
        let s = |v: f64| Tensor::new(v, &dev()).unwrap();
        let t: f64 = alignment_total_loss(&s(0.5), &s(1.2), &s(0.3), &s(0.1))
            .unwrap()
            .to_scalar()
            .unwrap();
        assert!((t - 2.1).abs() < 1e-12);
        let z: f64 = alignment_total_loss(&s(0.0), &s(0.0), &s(0.0), &s(0.0))
            .unwrap()
            .to_scalar()
            .unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let a = candle_core::Var::from_tensor(&rand_t(9, (1, 2, 4, 4))).unwrap();
        let b = rand_t(10, (1, 2, 4, 4));
        let loss = content_alignment_loss(a.as_tensor(), &b).unwrap();
        let grads = loss.backward().unwrap();
        let ga: Vec<f64> = grads
            .get(a.as_tensor())
            .unwrap()
            .flatten_all()
            .unwrap()
            .to_vec1()
            .unwrap();
        let base: Vec<f64> = a.flatten_all().unwrap().to_vec1().unwrap();
        let eps = 1e-6;
        for i in [0usize, 7, 31] {
            let mut plus = base.clone();
            plus[i] += eps;
            let mut minus = base.clone();
            minus[i] -= eps;
            let f = |data: Vec<f64>| -> f64 {
                let t = Tensor::from_vec(data, (1, 2, 4, 4), &dev()).unwrap();
                content_alignment_loss(&t, &b).unwrap().to_scalar().unwrap()
            };
            let num = (f(plus) - f(minus)) / (2.0 * eps);
            assert!(
                (ga[i] - num).abs() / num.abs().max(1e-6) < 1e-4,
                "grad {i}: analytic {} vs numeric {num}",
                ga[i]
            );
        }
    }
}
