//! Natural-statistics quality score: Mahalanobis distance between MSCN
//! coefficient statistics of an image and a model fitted on a pristine
//! corpus. Lower = more natural.

use serde::{Deserialize, Serialize};

use crate::data_model::Image;
use crate::error::{Error, Result};

use super::filters::{gaussian_kernel, Grid};
use super::linalg::{cholesky, mahalanobis_sq};
use super::stats::fit_gaussian;

pub use super::fog::MIN_FIT_IMAGES;

/// Stabilizer in the MSCN denominator, on the [0,1] intensity scale.
const MSCN_C: f64 = 1.0 / 255.0;
const SCALES: usize = 2;
/// Per scale: var, mean|m|, then (mean, mean|·|) of four orientation products.
const FEATURES_PER_SCALE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NssModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
    pub fit_count: usize,
}

fn mscn(lum: &Grid) -> Grid {
    let kernel = gaussian_kernel(7, 7.0 / 6.0);
    let mu = lum.filter_same(&kernel, 7);
    let sq = lum.zip(lum, |a, b| a * b).filter_same(&kernel, 7);
    let mut out = vec![0.0; lum.data.len()];
    for i in 0..lum.data.len() {
        let var = (sq.data[i] - mu.data[i] * mu.data[i]).max(0.0);
        out[i] = (lum.data[i] - mu.data[i]) / (var.sqrt() + MSCN_C);
    }
    Grid::new(lum.h, lum.w, out)
}

fn scale_features(m: &Grid, out: &mut Vec<f64>) {
    let n = m.data.len() as f64;
    let mean = m.data.iter().sum::<f64>() / n;
    let var = m.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mean_abs = m.data.iter().map(|v| v.abs()).sum::<f64>() / n;
    out.push(var);
    out.push(mean_abs);
    // neighbor products along horizontal, vertical and the two diagonals
    let offsets: [(usize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];
    for &(dy, dx) in &offsets {
        let (x0, x1) = if dx < 0 { (1, m.w) } else { (0, m.w - dx as usize) };
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut count = 0usize;
        for y in 0..m.h - dy {
            for x in x0..x1 {
                let p = m.get(y, x) * m.get(y + dy, (x as isize + dx) as usize);
                sum += p;
                abs_sum += p.abs();
                count += 1;
            }
        }
        out.push(sum / count as f64);
        out.push(abs_sum / count as f64);
    }
}

/// MSCN-statistics feature vector over [`SCALES`] dyadic scales.
pub fn nss_features(img: &Image) -> Vec<f64> {
    let mut lum = Grid::new(img.height(), img.width(), img.luminance());
    let mut feats = Vec::with_capacity(SCALES * FEATURES_PER_SCALE);
    for scale in 0..SCALES {
        if scale > 0 {
            let kernel = gaussian_kernel(3, 0.8);
            lum = lum.filter_same(&kernel, 3).downsample2();
        }
        scale_features(&mscn(&lum), &mut feats);
    }
    feats
}

/// Fits the pristine-corpus model (mean + ridge-regularized covariance).
pub fn fit_nss_model(clear_corpus: &[Image]) -> Result<NssModel> {
    if clear_corpus.len() < MIN_FIT_IMAGES {
        return Err(Error::data(format!(
            "nss model needs >= {MIN_FIT_IMAGES} images, got {}",
            clear_corpus.len()
        )));
    }
    let rows: Vec<Vec<f64>> = clear_corpus.iter().map(nss_features).collect();
    let (mean, covariance) = fit_gaussian(&rows)?;
    let mut feature_names = Vec::new();
    for scale in 0..SCALES {
        for name in [
            "var", "mean_abs", "h_mean", "h_abs", "v_mean", "v_abs", "d1_mean", "d1_abs",
            "d2_mean", "d2_abs",
        ] {
            feature_names.push(format!("s{scale}_{name}"));
        }
    }
    Ok(NssModel { feature_names, mean, covariance, fit_count: clear_corpus.len() })
}

/// Distance of the image's MSCN statistics from the pristine model.
pub fn nss_score(img: &Image, model: &NssModel) -> Result<f64> {
    let feats = nss_features(img);
    let dim = model.mean.len();
    let diff: Vec<f64> = feats.iter().zip(&model.mean).map(|(f, m)| f - m).collect();
    let l = cholesky(&model.covariance, dim)
        .ok_or_else(|| Error::numeric("nss covariance is not positive definite"))?;
    Ok(mahalanobis_sq(&l, dim, &diff).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_synthesis::{render_scene, SceneRecipe};

    fn corpus(n: usize, base: u64) -> Vec<Image> {
        (0..n)
            .map(|i| render_scene(&SceneRecipe::new(base + i as u64, 64)).unwrap().visible)
            .collect()
    }

    fn blur(img: &Image, passes: usize) -> Image {
        let kernel = gaussian_kernel(7, 2.0);
        let hw = img.height() * img.width();
        let mut data = vec![0.0; 3 * hw];
        for c in 0..3 {
            let mut g = Grid::new(img.height(), img.width(), img.plane(c).to_vec());
            for _ in 0..passes {
                g = g.filter_same(&kernel, 7);
            }
            data[c * hw..(c + 1) * hw].copy_from_slice(&g.data);
        }
        Image::new(img.height(), img.width(), 3, data).unwrap()
    }

    #[test]
    fn pristine_images_score_low_and_blur_increases_score() {
        let model = fit_nss_model(&corpus(50, 0)).unwrap();
        let held_out = corpus(8, 5000);
        for img in &held_out {
            let base = nss_score(img, &model).unwrap();
            let soft = nss_score(&blur(img, 1), &model).unwrap();
            let heavy = nss_score(&blur(img, 3), &model).unwrap();
            assert!(soft > base, "blur should raise the score: {soft} <= {base}");
            assert!(heavy > soft, "heavier blur should raise it further");
        }
        // held-out pristine images sit near the corpus band
        let mean_held: f64 =
            held_out.iter().map(|i| nss_score(i, &model).unwrap()).sum::<f64>() / 8.0;
        let mean_blur: f64 =
            held_out.iter().map(|i| nss_score(&blur(i, 2), &model).unwrap()).sum::<f64>() / 8.0;
        assert!(mean_held < mean_blur);
    }

    #[test]
    fn deterministic_repeat() {
        let model = fit_nss_model(&corpus(50, 100)).unwrap();
        let img = &corpus(1, 9000)[0];
        assert_eq!(nss_score(img, &model).unwrap(), nss_score(img, &model).unwrap());
    }
}
