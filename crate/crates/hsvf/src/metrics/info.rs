//! Histogram-based information measures (base-2 logs, 256 bins).

use crate::data_model::Image;
use crate::error::{Error, Result};

pub const BINS: usize = 256;

fn bin(v: f64) -> usize {
    ((v * BINS as f64) as usize).min(BINS - 1)
}

/// Shannon mutual information (bits) between two equally sized images via
/// the joint histogram of 256-level quantized luminance.
pub fn mutual_information(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_size(b) {
        return Err(Error::shape("mutual_information inputs differ in size".to_string()));
    }
    let la = a.luminance();
    let lb = b.luminance();
    let n = la.len() as f64;
    let mut joint = vec![0.0f64; BINS * BINS];
    for (&x, &y) in la.iter().zip(&lb) {
        joint[bin(x) * BINS + bin(y)] += 1.0;
    }
    let mut pa = vec![0.0; BINS];
    let mut pb = vec![0.0; BINS];
    for i in 0..BINS {
        for j in 0..BINS {
            let p = joint[i * BINS + j] / n;
            joint[i * BINS + j] = p;
            pa[i] += p;
            pb[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..BINS {
        for j in 0..BINS {
            let p = joint[i * BINS + j];
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    Ok(mi)
}

/// Fusion-benchmark convention: `MI(F;A) + MI(F;B)`.
pub fn fusion_mutual_information(fused: &Image, src_a: &Image, src_b: &Image) -> Result<f64> {
    Ok(mutual_information(fused, src_a)? + mutual_information(fused, src_b)?)
}

/// Marginal entropy (bits) of a 256-level quantized image.
pub fn entropy(img: &Image) -> f64 {
    let lum = img.luminance();
    let n = lum.len() as f64;
    let mut hist = vec![0.0f64; BINS];
    for &v in &lum {
        hist[bin(v)] += 1.0;
    }
    hist.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn self_information_is_entropy() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = Image::new(
            16,
            16,
            1,
            (0..256).map(|_| rng.gen_range(0.0..=1.0)).collect(),
        )
        .unwrap();
        let mi = mutual_information(&x, &x).unwrap();
        assert!((mi - entropy(&x)).abs() < 1e-9);
    }

    #[test]
    fn two_level_entropy_hand_value() {
        // histogram {0.25, 0.75} -> H = 0.811278 bits
        let mut data = vec![0.9; 256];
        for v in data.iter_mut().take(64) {
            *v = 0.1;
        }
        let x = Image::new(16, 16, 1, data).unwrap();
        let h = entropy(&x);
        assert!((h - 0.811_278_124_459_1).abs() < 1e-9, "H = {h}");
        assert!((mutual_information(&x, &x).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn constant_images_have_zero_mi() {
        let a = Image::new(16, 16, 1, vec![0.5; 256]).unwrap();
        let b = Image::new(16, 16, 1, vec![0.25; 256]).unwrap();
        assert_eq!(mutual_information(&a, &b).unwrap(), 0.0);
    }
}
