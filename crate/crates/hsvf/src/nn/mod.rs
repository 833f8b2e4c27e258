//! Thin neural-network layer over candle: a seeded parameter store with
//! named variables, small convolutional blocks, and the differentiable image
//! operators (Sobel gradients, Gaussian-window SSIM, instance norm) used by
//! the loss functions.

pub mod blocks;
pub mod ops;

use candle_core::{DType, Device, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_model::{Image, SemanticMask, IGNORE_LABEL, NUM_CLASSES};
use crate::error::{Error, Result};

pub use blocks::{Conv2d, Linear};

/// Registry of named trainable variables with deterministic seeded
/// initialization. Initialization values depend only on (seed, creation
/// order), so identical construction code reproduces identical parameters.
pub struct ParamStore {
    device: Device,
    dtype: DType,
    rng: ChaCha8Rng,
    params: Vec<(String, Var)>,
}

impl ParamStore {
    pub fn new(seed: u64, dtype: DType) -> Self {
        Self {
            device: Device::Cpu,
            dtype,
            rng: ChaCha8Rng::seed_from_u64(seed),
            params: Vec::new(),
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    fn register(&mut self, name: &str, var: Var) -> Result<Var> {
        if self.params.iter().any(|(n, _)| n == name) {
            return Err(Error::config(format!("duplicate parameter name {name}")));
        }
        self.params.push((name.to_string(), var.clone()));
        Ok(var)
    }

    /// New variable with i.i.d. uniform(-bound, bound) entries.
    pub fn var_uniform(&mut self, name: &str, shape: &[usize], bound: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        let values: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-bound..=bound)).collect();
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        self.register(name, Var::from_tensor(&t)?)
    }

    pub fn var_zeros(&mut self, name: &str, shape: &[usize]) -> Result<Var> {
        let t = Tensor::zeros(shape, self.dtype, &self.device)?;
        self.register(name, Var::from_tensor(&t)?)
    }

    /// All variables, in creation order.
    pub fn vars(&self) -> Vec<Var> {
        self.params.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Variables whose name starts with `prefix`.
    pub fn vars_with_prefix(&self, prefix: &str) -> Vec<Var> {
        self.params
            .iter()
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn named(&self) -> &[(String, Var)] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Overwrites a variable's contents by name (used by checkpoint loads).
    pub fn set(&mut self, name: &str, value: &Tensor) -> Result<()> {
        let var = self
            .get(name)
            .ok_or_else(|| Error::data(format!("unknown parameter {name}")))?;
        var.set(&value.to_dtype(self.dtype)?)?;
        Ok(())
    }
}

/// Converts an image to a (1, C, H, W) tensor.
pub fn image_to_tensor(img: &Image, dtype: DType, device: &Device) -> Result<Tensor> {
    let t = Tensor::from_slice(
        img.data(),
        (1, img.channels(), img.height(), img.width()),
        device,
    )?;
    Ok(t.to_dtype(dtype)?)
}

/// Converts a (1, C, H, W) or (C, H, W) tensor back to an image, clamping
/// to the valid intensity range.
pub fn tensor_to_image(t: &Tensor) -> Result<Image> {
    let t = match t.dims().len() {
        4 => t.squeeze(0)?,
        3 => t.clone(),
        d => return Err(Error::shape(format!("expected 3 or 4 dims, got {d}"))),
    };
    let (c, h, w) = t.dims3()?;
    let data: Vec<f64> = t
        .to_dtype(DType::F64)?
        .flatten_all()?
        .to_vec1::<f64>()?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Image::new(h, w, c, data)
}

/// One-hot labels (1, NUM_CLASSES, H, W) plus a validity plane (1, 1, H, W)
/// that zeroes ignore pixels.
pub fn mask_to_onehot(
    mask: &SemanticMask,
    dtype: DType,
    device: &Device,
) -> Result<(Tensor, Tensor)> {
    let (h, w) = (mask.height(), mask.width());
    let mut onehot = vec![0.0f64; NUM_CLASSES * h * w];
    let mut valid = vec![0.0f64; h * w];
    for (i, &l) in mask.labels().iter().enumerate() {
        if l != IGNORE_LABEL {
            onehot[l as usize * h * w + i] = 1.0;
            valid[i] = 1.0;
        }
    }
    let onehot = Tensor::from_vec(onehot, (1, NUM_CLASSES, h, w), device)?.to_dtype(dtype)?;
    let valid = Tensor::from_vec(valid, (1, 1, h, w), device)?.to_dtype(dtype)?;
    Ok((onehot, valid))
}

/// Argmax over the class dimension of (1, NUM_CLASSES, H, W) logits.
pub fn logits_to_mask(logits: &Tensor) -> Result<SemanticMask> {
    let (_, c, h, w) = logits.dims4()?;
    if c != NUM_CLASSES {
        return Err(Error::shape(format!("expected {NUM_CLASSES} classes, got {c}")));
    }
    let flat = logits
        .to_dtype(DType::F64)?
        .squeeze(0)?
        .flatten_all()?
        .to_vec1::<f64>()?;
    let hw = h * w;
    let mut labels = vec![0u8; hw];
    for i in 0..hw {
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for cls in 0..NUM_CLASSES {
            let v = flat[cls * hw + i];
            if v > best_v {
                best_v = v;
                best = cls;
            }
        }
        labels[i] = best as u8;
    }
    SemanticMask::new(h, w, labels)
}
