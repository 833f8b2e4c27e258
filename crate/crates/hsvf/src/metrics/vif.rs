//! Pixel-domain multiscale visual information fidelity (GSM model with a
//! fixed noise variance, four scales).

use crate::data_model::Image;
use crate::error::{Error, Result};

use super::filters::{gaussian_kernel, Grid};

/// Noise variance of the GSM channel model, on the 8-bit intensity scale.
const SIGMA_NSQ: f64 = 2.0;
const SCALES: usize = 4;
const EPS: f64 = 1e-10;

/// VIF of `distorted` against `reference`. 1 for identical images, ~0 for a
/// constant (information-free) output. Requires at least 32×32 inputs so
/// all four scales stay defined.
pub fn vif(reference: &Image, distorted: &Image) -> Result<f64> {
    if !reference.same_size(distorted) {
        return Err(Error::shape("vif inputs differ in size".to_string()));
    }
    if reference.height() < 32 || reference.width() < 32 {
        return Err(Error::data("vif requires at least 32x32 images for 4 scales"));
    }
    let to_grid = |img: &Image| {
        Grid::new(
            img.height(),
            img.width(),
            img.luminance().iter().map(|v| v * 255.0).collect(),
        )
    };
    let mut ref_g = to_grid(reference);
    let mut dist_g = to_grid(distorted);

    let mut num = 0.0;
    let mut den = 0.0;
    for scale in 1..=SCALES {
        let k = (1usize << (SCALES - scale + 1)) + 1;
        let kernel = gaussian_kernel(k, k as f64 / 5.0);
        if scale > 1 {
            ref_g = ref_g.filter_valid(&kernel, k).downsample2();
            dist_g = dist_g.filter_valid(&kernel, k).downsample2();
        }
        let mu1 = ref_g.filter_valid(&kernel, k);
        let mu2 = dist_g.filter_valid(&kernel, k);
        let s11 = ref_g.zip(&ref_g, |a, b| a * b).filter_valid(&kernel, k);
        let s22 = dist_g.zip(&dist_g, |a, b| a * b).filter_valid(&kernel, k);
        let s12 = ref_g.zip(&dist_g, |a, b| a * b).filter_valid(&kernel, k);
        for i in 0..mu1.data.len() {
            let (m1, m2) = (mu1.data[i], mu2.data[i]);
            let sigma1 = (s11.data[i] - m1 * m1).max(0.0);
            let sigma2 = (s22.data[i] - m2 * m2).max(0.0);
            let sigma12 = s12.data[i] - m1 * m2;

            let mut g = sigma12 / (sigma1 + EPS);
            let mut sv = sigma2 - g * sigma12;
            if sigma1 < EPS {
                g = 0.0;
                sv = sigma2;
            }
            if sigma2 < EPS {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = sigma2;
                g = 0.0;
            }
            let sv = sv.max(EPS);
            num += (1.0 + g * g * sigma1 / (sv + SIGMA_NSQ)).log10();
            den += (1.0 + sigma1 / SIGMA_NSQ).log10();
        }
    }
    if den <= 0.0 {
        // reference carries no information at any scale
        return Ok(0.0);
    }
    Ok(num / den)
}
