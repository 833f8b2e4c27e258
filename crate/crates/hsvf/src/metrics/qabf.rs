//! Sobel-based edge preservation measure Q_AB/F (Xydeas–Petrović).
//!
//! Keeps the published sigmoid constants and normalizes by the attainable
//! maximum so perfect preservation scores 1.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::data_model::Image;
use crate::error::{Error, Result};

use super::filters::{sobel, Grid};

const GAMMA_G: f64 = 0.9994;
const K_G: f64 = -15.0;
const SIGMA_G: f64 = 0.5;
const GAMMA_A: f64 = 0.9879;
const K_A: f64 = -22.0;
const SIGMA_A: f64 = 0.8;

fn edge_map(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let grid = Grid::new(img.height(), img.width(), img.luminance());
    let (gx, gy) = sobel(&grid);
    let mut strength = vec![0.0; grid.data.len()];
    let mut angle = vec![0.0; grid.data.len()];
    for i in 0..grid.data.len() {
        strength[i] = (gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]).sqrt();
        // orientation folded into (-pi/2, pi/2]
        let mut a = gy.data[i].atan2(gx.data[i]);
        if a > FRAC_PI_2 {
            a -= PI;
        }
        if a <= -FRAC_PI_2 {
            a += PI;
        }
        angle[i] = a;
    }
    (strength, angle)
}

fn sigmoid_quality(gamma: f64, kappa: f64, sigma: f64, x: f64) -> f64 {
    gamma / (1.0 + (kappa * (x - sigma)).exp())
}

/// Edge preservation of one source into the fused image at one pixel,
/// normalized so a perfectly preserved edge scores 1.
fn preservation(gs: f64, ga: f64, fs: f64, fa: f64) -> f64 {
    let rel_strength = if gs > fs {
        if gs > 0.0 {
            fs / gs
        } else {
            0.0
        }
    } else if fs > 0.0 {
        gs / fs
    } else {
        1.0
    };
    let rel_angle = 1.0 - (ga - fa).abs() / FRAC_PI_2;
    let qg = sigmoid_quality(GAMMA_G, K_G, SIGMA_G, rel_strength);
    let qa = sigmoid_quality(GAMMA_A, K_A, SIGMA_A, rel_angle);
    let qmax = sigmoid_quality(GAMMA_G, K_G, SIGMA_G, 1.0) * sigmoid_quality(GAMMA_A, K_A, SIGMA_A, 1.0);
    qg * qa / qmax
}

/// Q_AB/F: gradient-strength-weighted edge preservation from both sources
/// into the fused image, in [0, 1].
pub fn q_abf(src_a: &Image, src_b: &Image, fused: &Image) -> Result<f64> {
    if !src_a.same_size(src_b) || !src_a.same_size(fused) {
        return Err(Error::shape("q_abf inputs differ in size".to_string()));
    }
    let (gs_a, ga_a) = edge_map(src_a);
    let (gs_b, ga_b) = edge_map(src_b);
    let (gs_f, ga_f) = edge_map(fused);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..gs_a.len() {
        let qaf = preservation(gs_a[i], ga_a[i], gs_f[i], ga_f[i]);
        let qbf = preservation(gs_b[i], ga_b[i], gs_f[i], ga_f[i]);
        num += qaf * gs_a[i] + qbf * gs_b[i];
        den += gs_a[i] + gs_b[i];
    }
    if den <= 0.0 {
        // edge-free sources preserve nothing either way
        return Ok(0.0);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn textured(seed: u64, s: usize) -> Image {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..s * s)
            .map(|i| {
                let (y, x) = (i / s, i % s);
                (0.5 + 0.35 * (((y / 3) + (x / 4)) % 2) as f64 + rng.gen_range(-0.05..0.05))
                    .clamp(0.0, 1.0)
            })
            .collect();
        Image::new(s, s, 1, data).unwrap()
    }

    #[test]
    fn perfect_preservation_on_textured_inputs() {
        let x = textured(1, 32);
        let q = q_abf(&x, &x, &x).unwrap();
        assert!(q >= 0.99, "q = {q}");
    }

    #[test]
    fn constant_fused_scores_near_zero() {
        let a = textured(2, 32);
        let b = textured(3, 32);
        let c = Image::new(32, 32, 1, vec![0.5; 1024]).unwrap();
        assert!(q_abf(&a, &b, &c).unwrap() < 0.05);
    }

    #[test]
    fn symmetric_in_sources() {
        let a = textured(4, 32);
        let b = textured(5, 32);
        let f = textured(6, 32);
        let q1 = q_abf(&a, &b, &f).unwrap();
        let q2 = q_abf(&b, &a, &f).unwrap();
        assert!((q1 - q2).abs() < 1e-12);
    }
}
