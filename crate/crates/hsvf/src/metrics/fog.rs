//! Fog-density surrogate: a distance between fog-sensitive image features
//! (local contrast, saturation, dark-channel statistics, gradient energy)
//! and a model fitted on a clear corpus. Hazier images score larger.
//!
//! Scoring uses per-feature deviations oriented along the known haze
//! direction and scaled by the fitted standard deviations, so the score is
//! monotone in each feature. The full covariance is stored for diagnostics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_model::Image;
use crate::error::{Error, Result};

use super::filters::{sobel, Grid};
use super::stats::fit_gaussian;

/// Minimum number of clear images to fit a model on.
pub const MIN_FIT_IMAGES: usize = 50;

pub const FOG_FEATURES: [&str; 4] = [
    "local_contrast",
    "saturation",
    "dark_channel",
    "gradient_energy",
];

/// Haze direction per feature: +1 if haze increases it, −1 if it lowers it.
const FOG_SIGNS: [f64; 4] = [-1.0, -1.0, 1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Row-major covariance with ridge regularization on the diagonal.
    pub covariance: Vec<f64>,
    pub signs: Vec<f64>,
    pub fit_count: usize,
}

/// Mean of per-block standard deviations over non-overlapping 8×8 blocks.
fn local_contrast(lum: &Grid) -> f64 {
    let block = 8;
    let (by, bx) = (lum.h / block, lum.w / block);
    if by == 0 || bx == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for y in 0..by {
        for x in 0..bx {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for dy in 0..block {
                for dx in 0..block {
                    let v = lum.get(y * block + dy, x * block + dx);
                    sum += v;
                    sq += v * v;
                }
            }
            let n = (block * block) as f64;
            let mean = sum / n;
            acc += (sq / n - mean * mean).max(0.0).sqrt();
        }
    }
    acc / (by * bx) as f64
}

fn saturation(img: &Image) -> f64 {
    if img.channels() == 1 {
        return 0.0;
    }
    let hw = img.height() * img.width();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let mut acc = 0.0;
    for i in 0..hw {
        let mx = r[i].max(g[i]).max(b[i]);
        let mn = r[i].min(g[i]).min(b[i]);
        acc += mx - mn;
    }
    acc / hw as f64
}

/// Mean of the dark channel: channel minimum eroded by a 7×7 minimum filter.
fn dark_channel(img: &Image) -> f64 {
    let (h, w) = (img.height(), img.width());
    let mut mins = vec![f64::INFINITY; h * w];
    for c in 0..img.channels() {
        let plane = img.plane(c);
        for (m, &v) in mins.iter_mut().zip(plane) {
            *m = m.min(v);
        }
    }
    let r = 3isize;
    let mut acc = 0.0;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut m = f64::INFINITY;
            for dy in -r..=r {
                for dx in -r..=r {
                    let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                    let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                    m = m.min(mins[yy * w + xx]);
                }
            }
            acc += m;
        }
    }
    acc / (h * w) as f64
}

fn gradient_energy(lum: &Grid) -> f64 {
    let (gx, gy) = sobel(lum);
    let n = gx.data.len() as f64;
    gx.data
        .iter()
        .zip(&gy.data)
        .map(|(&a, &b)| (a * a + b * b).sqrt())
        .sum::<f64>()
        / n
}

/// Fog-aware feature vector of one image.
pub fn fog_features(img: &Image) -> Vec<f64> {
    let lum = Grid::new(img.height(), img.width(), img.luminance());
    vec![
        local_contrast(&lum),
        saturation(img),
        dark_channel(img),
        gradient_energy(&lum),
    ]
}

/// Fits the clear-corpus feature model. Requires [`MIN_FIT_IMAGES`] images.
pub fn fit_fog_model(clear_corpus: &[Image]) -> Result<FogModel> {
    if clear_corpus.len() < MIN_FIT_IMAGES {
        return Err(Error::data(format!(
            "fog model needs >= {MIN_FIT_IMAGES} clear images, got {}",
            clear_corpus.len()
        )));
    }
    let rows: Vec<Vec<f64>> = clear_corpus.iter().map(fog_features).collect();
    let (mean, covariance) = fit_gaussian(&rows)?;
    Ok(FogModel {
        feature_names: FOG_FEATURES.iter().map(|s| s.to_string()).collect(),
        mean,
        covariance,
        signs: FOG_SIGNS.to_vec(),
        fit_count: clear_corpus.len(),
    })
}

/// Fog-density score: norm of haze-oriented, deviation-scaled features.
/// Lower means clearer; clear-corpus images land near zero.
pub fn fog_density(img: &Image, model: &FogModel) -> f64 {
    let feats = fog_features(img);
    let dim = model.mean.len();
    let mut acc = 0.0;
    for i in 0..dim {
        let sd = model.covariance[i * dim + i].sqrt().max(1e-9);
        let z = (model.signs[i] * (feats[i] - model.mean[i])).max(0.0) / sd;
        acc += z * z;
    }
    acc.sqrt()
}

pub fn save_model<T: Serialize>(model: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(model)
        .map_err(|e| Error::data(format!("model serialization: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::data(format!("model parse: {e}")))
}
