//! Final assembly: G^Final fuses the two stream outputs into O_Final, the
//! overall objective weights the five loss components, and `HsvfModel`
//! bundles every module for single-call inference.

use candle_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::data_model::{Image, ScenePair, SemanticMask};
use crate::error::{Error, Result};
use crate::nn::ops::{clamp01, leaky_relu};
use crate::nn::{image_to_tensor, logits_to_mask, tensor_to_image, Conv2d, ParamStore};
use crate::scene_synthesis::Modality;
use crate::semantic_alignment::AlignmentModule;
use crate::semantic_reconstruction::{DiscriminatorBank, ReconGenerator};
use crate::visual_fusion::{AttentionArm, FusionModule};

/// Weights of the five terms of the overall objective.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_align: f64,
    pub alpha_recon: f64,
    pub beta_fusion: f64,
    pub alpha1_final: f64,
    pub beta1_final: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_align: 1.0,
            alpha_recon: 0.1,
            beta_fusion: 0.01,
            alpha1_final: 1.0,
            beta1_final: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_align", self.lambda_align),
            ("alpha_recon", self.alpha_recon),
            ("beta_fusion", self.beta_fusion),
            ("alpha1_final", self.alpha1_final),
            ("beta1_final", self.beta1_final),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("loss weight {name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// The five unweighted loss components as scalar tensors.
pub struct LossComponents {
    pub align: Tensor,
    pub region_adv: Tensor,
    pub fusion: Tensor,
    pub final_region_adv: Tensor,
    pub final_fusion: Tensor,
}

/// Unweighted component values plus the weighted total, for logging.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LossReport {
    pub align: f64,
    pub region_adv: f64,
    pub fusion: f64,
    pub final_region_adv: f64,
    pub final_fusion: f64,
    pub total: f64,
}

/// Weighted sum of the five components.
pub fn total_loss(c: &LossComponents, w: &LossWeights) -> Result<Tensor> {
    w.validate()?;
    let total = ((((c.align.affine(w.lambda_align, 0.0)?
        + c.region_adv.affine(w.alpha_recon, 0.0)?)?
        + c.fusion.affine(w.beta_fusion, 0.0)?)?
        + c.final_region_adv.affine(w.alpha1_final, 0.0)?)?
        + c.final_fusion.affine(w.beta1_final, 0.0)?)?;
    let v: f64 = total.to_dtype(candle_core::DType::F64)?.to_scalar()?;
    if !v.is_finite() {
        return Err(Error::numeric(format!("total loss is not finite: {v}")));
    }
    Ok(total)
}

pub fn loss_report(c: &LossComponents, w: &LossWeights) -> Result<LossReport> {
    let f = |t: &Tensor| -> Result<f64> {
        Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar()?)
    };
    Ok(LossReport {
        align: f(&c.align)?,
        region_adv: f(&c.region_adv)?,
        fusion: f(&c.fusion)?,
        final_region_adv: f(&c.final_region_adv)?,
        final_fusion: f(&c.final_fusion)?,
        total: f(&total_loss(c, w)?)?,
    })
}

/// Residual fusion of the two stream outputs. The last block is
/// zero-initialized, so at initialization the output is exactly the
/// average of O_SR and O_VF.
pub struct FinalGenerator {
    c1: Conv2d,
    c2: Conv2d,
    head: Conv2d,
}

impl FinalGenerator {
    pub fn new(store: &mut ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(store, &format!("{name}.c1"), 6, 16, 3, 1, 1, true)?,
            c2: Conv2d::new(store, &format!("{name}.c2"), 16, 16, 3, 1, 1, true)?,
            head: Conv2d::new_zeroed(store, &format!("{name}.head"), 16, 3, 3, 1, 1)?,
        })
    }

    pub fn forward(&self, o_sr: &Tensor, o_vf: &Tensor) -> Result<Tensor> {
        if o_sr.dims() != o_vf.dims() {
            return Err(Error::shape(format!(
                "stream outputs differ in shape: {:?} vs {:?}",
                o_sr.dims(),
                o_vf.dims()
            )));
        }
        let y = Tensor::cat(&[o_sr, o_vf], 1)?;
        let y = leaky_relu(&self.c1.forward(&y)?, 0.2)?;
        let y = leaky_relu(&self.c2.forward(&y)?, 0.2)?;
        let residual = self.head.forward(&y)?;
        let avg = ((o_sr + o_vf)? * 0.5)?;
        clamp01(&(avg + residual)?)
    }
}

pub fn final_generate(gen: &FinalGenerator, o_sr: &Tensor, o_vf: &Tensor) -> Result<Tensor> {
    gen.forward(o_sr, o_vf)
}

/// All trainable modules plus their parameter store.
pub struct HsvfModel {
    pub store: ParamStore,
    pub align: AlignmentModule,
    pub recon_gen: ReconGenerator,
    pub recon_disc: DiscriminatorBank,
    pub fusion: FusionModule,
    pub final_gen: FinalGenerator,
    pub final_disc: DiscriminatorBank,
}

impl HsvfModel {
    pub fn new(seed: u64, dtype: candle_core::DType, arm: AttentionArm) -> Result<Self> {
        let mut store = ParamStore::new(seed, dtype);
        let align = AlignmentModule::new(&mut store)?;
        let recon_gen = ReconGenerator::new(&mut store, "recon.gen")?;
        let recon_disc = DiscriminatorBank::new(&mut store, "recon.disc")?;
        let fusion = FusionModule::new(&mut store, arm)?;
        let final_gen = FinalGenerator::new(&mut store, "final.gen")?;
        let final_disc = DiscriminatorBank::new(&mut store, "final.disc")?;
        Ok(Self { store, align, recon_gen, recon_disc, fusion, final_gen, final_disc })
    }

    /// Dual-branch segmentation logits from the hazy pair, plus their
    /// average (the dual-modality prediction).
    pub fn seg_logits(&self, vis: &Tensor, nir: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
        let c_v = self.align.encode_content(vis, Modality::Vis)?;
        let c_n = self.align.encode_content(nir, Modality::Nir)?;
        let l_v = self.align.decode_segmentation(&c_v)?;
        let l_n = self.align.decode_segmentation(&c_n)?;
        let avg = ((&l_v + &l_n)? * 0.5)?;
        Ok((l_v, l_n, avg))
    }

    /// Full forward pass on tensors; returns (O_SR, O_VF, O_Final,
    /// averaged seg logits).
    pub fn forward(&self, vis: &Tensor, nir: &Tensor) -> Result<(Tensor, Tensor, Tensor, Tensor)> {
        let c_v = self.align.encode_content(vis, Modality::Vis)?;
        let c_n = self.align.encode_content(nir, Modality::Nir)?;
        let l_v = self.align.decode_segmentation(&c_v)?;
        let l_n = self.align.decode_segmentation(&c_n)?;
        let logits = ((l_v + l_n)? * 0.5)?;
        let o_sr = self.recon_gen.forward(vis, &logits, &c_v)?;
        let o_vf = self.fusion.forward(vis, nir)?;
        let o_final = self.final_gen.forward(&o_sr, &o_vf)?;
        Ok((o_sr, o_vf, o_final, logits))
    }

    /// End-to-end inference on a scene pair.
    pub fn infer(&self, pair: &ScenePair) -> Result<Inference> {
        pair.validate()?;
        let vis = image_to_tensor(&pair.visible, self.store.dtype(), self.store.device())?;
        let nir = image_to_tensor(&pair.nir, self.store.dtype(), self.store.device())?;
        let (o_sr, o_vf, o_final, logits) = self.forward(&vis, &nir)?;
        Ok(Inference {
            o_final: tensor_to_image(&o_final)?,
            o_sr: tensor_to_image(&o_sr)?,
            o_vf: tensor_to_image(&o_vf)?,
            seg_pred: logits_to_mask(&logits.to_dtype(candle_core::DType::F64)?)?,
        })
    }
}

/// Inference outputs: the final image, both stream intermediates, and the
/// predicted segmentation.
pub struct Inference {
    pub o_final: Image,
    pub o_sr: Image,
    pub o_vf: Image,
    pub seg_pred: SemanticMask,
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::{DType, Device, Tensor};

    fn dev() -> Device {
        Device::Cpu
    }

    fn scalar(v: f64) -> Tensor {
        Tensor::new(v, &dev()).unwrap()
    }

    fn components(v: [f64; 5]) -> LossComponents {
        LossComponents {
            align: scalar(v[0]),
            region_adv: scalar(v[1]),
            fusion: scalar(v[2]),
            final_region_adv: scalar(v[3]),
            final_fusion: scalar(v[4]),
        }
    }

    fn rand_t(seed: u64, shape: (usize, usize, usize, usize)) -> Tensor {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = shape.0 * shape.1 * shape.2 * shape.3;
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        Tensor::from_vec(data, shape, &dev()).unwrap()
    }

    #[test]
    fn default_weights_give_2_21_on_unit_components() {
        let w = LossWeights::default();
        let t: f64 = total_loss(&components([1.0; 5]), &w).unwrap().to_scalar().unwrap();
        assert!((t - 2.21).abs() < 1e-12);
        let z: f64 = total_loss(&components([0.0; 5]), &w).unwrap().to_scalar().unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let w = LossWeights { alpha1_final: -0.5, ..Default::default() };
        assert!(total_loss(&components([1.0; 5]), &w).is_err());
        assert!(w.validate().is_err());
        assert!(LossWeights::default().validate().is_ok());
    }

    #[test]
    fn total_is_linear_in_each_component() {
        let w = LossWeights::default();
        let base: f64 = total_loss(&components([0.3, 0.4, 0.5, 0.6, 0.7]), &w)
            .unwrap()
            .to_scalar()
            .unwrap();
        let weights = [w.lambda_align, w.alpha_recon, w.beta_fusion, w.alpha1_final, w.beta1_final];
        for i in 0..5 {
            let mut v = [0.3, 0.4, 0.5, 0.6, 0.7];
            v[i] += 1.0;
            let bumped: f64 = total_loss(&components(v), &w).unwrap().to_scalar().unwrap();
            assert!(
                (bumped - base - weights[i]).abs() < 1e-12,
                "component {i}: delta {} expected {}",
                bumped - base,
                weights[i]
            );
        }
        // Zero weight removes the component's influence entirely.
        let w0 = LossWeights { alpha1_final: 0.0, ..Default::default() };
        let a: f64 = total_loss(&components([1.0, 1.0, 1.0, 0.0, 1.0]), &w0)
            .unwrap()
            .to_scalar()
            .unwrap();
        let b: f64 = total_loss(&components([1.0, 1.0, 1.0, 9.0, 1.0]), &w0)
            .unwrap()
            .to_scalar()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_keeps_unweighted_components() {
        let w = LossWeights::default();
        let r = loss_report(&components([0.5, 1.0, 2.0, 0.25, 4.0]), &w).unwrap();
        assert_eq!(r.align, 0.5);
        assert_eq!(r.region_adv, 1.0);
        assert_eq!(r.final_fusion, 4.0);
        let expect = 0.5 + 0.1 + 0.02 + 0.25 + 0.4;
        assert!((r.total - expect).abs() < 1e-12);
    }

    #[test]
    fn final_generator_starts_as_exact_average() {
        let mut store = ParamStore::new(23, DType::F64);
        let gen = FinalGenerator::new(&mut store, "final.gen").unwrap();
        let a = rand_t(1, (1, 3, 32, 32));
        let b = rand_t(2, (1, 3, 32, 32));
        let out = gen.forward(&a, &b).unwrap();
        let avg = ((&a + &b).unwrap() * 0.5).unwrap();
        let got: Vec<f64> = out.flatten_all().unwrap().to_vec1().unwrap();
        let expect: Vec<f64> = avg.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(got, expect);

        let bad = rand_t(3, (1, 3, 16, 16));
        assert!(gen.forward(&a, &bad).is_err());
    }

    #[test]
    fn inference_is_deterministic_and_bounded() {
        use crate::scene_synthesis::{synthesize_sample, CorpusOptions};
        let opts = CorpusOptions::default();
        let (_clear, hazy) = synthesize_sample(&opts, 0).unwrap();
        let model = HsvfModel::new(5, DType::F64, AttentionArm::Joint).unwrap();
        let a = model.infer(&hazy).unwrap();
        let b = model.infer(&hazy).unwrap();
        assert_eq!(a.o_final, b.o_final);
        assert_eq!(a.o_sr, b.o_sr);
        assert_eq!(a.o_vf, b.o_vf);
        assert_eq!(a.o_final.height(), hazy.visible.height());
        assert!(a.o_final.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(a.seg_pred.labels().iter().all(|&l| l < 6));
    }
}
