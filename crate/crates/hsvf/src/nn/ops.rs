//! Differentiable image operators used across the loss functions.

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(x.maximum(&(x * slope)?)?)
}

/// Clamp into [0, 1] through max/min so gradients flow inside the range.
pub fn clamp01(x: &Tensor) -> Result<Tensor> {
    Ok(x.maximum(0.0)?.minimum(1.0)?)
}

/// Per-sample, per-channel normalization over the spatial dimensions.
pub fn instance_norm(x: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(candle_core::D::Minus1)?.mean_keepdim(2)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered
        .sqr()?
        .mean_keepdim(candle_core::D::Minus1)?
        .mean_keepdim(2)?;
    Ok(centered.broadcast_div(&(var + eps)?.sqrt()?)?)
}

/// Reflect-101 padding by one pixel on both spatial axes of (N, C, H, W).
pub fn reflect_pad1(x: &Tensor) -> Result<Tensor> {
    let (_, _, h, w) = x.dims4()?;
    if h < 2 || w < 2 {
        return Err(Error::shape("reflect padding needs at least 2x2 input".to_string()));
    }
    let top = x.narrow(2, 1, 1)?;
    let bottom = x.narrow(2, h - 2, 1)?;
    let x = Tensor::cat(&[&top, x, &bottom], 2)?;
    let left = x.narrow(3, 1, 1)?;
    let right = x.narrow(3, w - 2, 1)?;
    Ok(Tensor::cat(&[&left, &x, &right], 3)?)
}

fn depthwise_kernel(base: &[f64; 9], channels: usize, dtype: DType, dev: &Device) -> Result<Tensor> {
    let mut data = Vec::with_capacity(channels * 9);
    for _ in 0..channels {
        data.extend_from_slice(base);
    }
    Ok(Tensor::from_vec(data, (channels, 1, 3, 3), dev)?.to_dtype(dtype)?)
}

const SOBEL_X: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];
const SOBEL_Y: [f64; 9] = [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0];

/// Smooth per-pixel Sobel gradient magnitude, per channel, with reflect
/// padding: sqrt(gx² + gy² + 1e-12).
pub fn gradient_magnitude(x: &Tensor) -> Result<Tensor> {
    let (_, c, _, _) = x.dims4()?;
    let padded = reflect_pad1(x)?;
    let kx = depthwise_kernel(&SOBEL_X, c, x.dtype(), x.device())?;
    let ky = depthwise_kernel(&SOBEL_Y, c, x.dtype(), x.device())?;
    let gx = padded.conv2d(&kx, 0, 1, 1, c)?;
    let gy = padded.conv2d(&ky, 0, 1, 1, c)?;
    Ok(((gx.sqr()? + gy.sqr()?)? + 1e-12)?.sqrt()?)
}

/// Normalized Gaussian window as a depthwise (C, 1, k, k) kernel.
pub fn gaussian_window(
    k: usize,
    sigma: f64,
    channels: usize,
    dtype: DType,
    dev: &Device,
) -> Result<Tensor> {
    let kernel = crate::metrics::filters::gaussian_kernel(k, sigma);
    let mut data = Vec::with_capacity(channels * k * k);
    for _ in 0..channels {
        data.extend_from_slice(&kernel);
    }
    Ok(Tensor::from_vec(data, (channels, 1, k, k), dev)?.to_dtype(dtype)?)
}

/// Differentiable mean SSIM with a Gaussian window (valid mode), standard
/// constants C1 = 0.01², C2 = 0.03² on the [0,1] range.
pub fn ssim_mean(a: &Tensor, b: &Tensor, window: usize) -> Result<Tensor> {
    let (_, c, h, w) = a.dims4()?;
    if a.dims() != b.dims() {
        return Err(Error::shape("ssim inputs differ in shape".to_string()));
    }
    if window > h || window > w {
        return Err(Error::data("ssim window larger than image"));
    }
    let win = gaussian_window(window, 1.5, c, a.dtype(), a.device())?;
    let filt = |x: &Tensor| x.conv2d(&win, 0, 1, 1, c);
    let mu1 = filt(a)?;
    let mu2 = filt(b)?;
    let s11 = (filt(&a.sqr()?)? - mu1.sqr()?)?;
    let s22 = (filt(&b.sqr()?)? - mu2.sqr()?)?;
    let s12 = (filt(&(a * b)?)? - (&mu1 * &mu2)?)?;
    let c1 = 0.01 * 0.01;
    let c2 = 0.03 * 0.03;
    let num = (((&mu1 * &mu2)? * 2.0)? + c1)? * ((s12 * 2.0)? + c2)?;
    let den = ((mu1.sqr()? + mu2.sqr()?)? + c1)? * ((s11 + s22)? + c2)?;
    Ok((num? / den?)?.mean_all()?)
}

/// Global average over the spatial dimensions: (N, C, H, W) -> (N, C).
pub fn global_avg(x: &Tensor) -> Result<Tensor> {
    Ok(x.mean(candle_core::D::Minus1)?.mean(candle_core::D::Minus1)?)
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2(x: &Tensor) -> Result<Tensor> {
    let (_, _, h, w) = x.dims4()?;
    Ok(x.upsample_nearest2d(2 * h, 2 * w)?)
}

/// Mean absolute difference over all elements.
pub fn mean_l1(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.dims() != b.dims() {
        return Err(Error::shape(format!(
            "mean_l1 shape mismatch: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok((a - b)?.abs()?.mean_all()?)
}

/// Broadcast a single-channel image tensor to `channels` channels.
pub fn broadcast_channels(x: &Tensor, channels: usize) -> Result<Tensor> {
    let (n, c, h, w) = x.dims4()?;
    if c == channels {
        return Ok(x.clone());
    }
    if c != 1 {
        return Err(Error::shape(format!("cannot broadcast {c} channels to {channels}")));
    }
    Ok(x.broadcast_as((n, channels, h, w))?.contiguous()?)
}
