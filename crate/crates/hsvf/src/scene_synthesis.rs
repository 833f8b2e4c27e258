//! Procedural "MiniVNHD" corpus: clear visible/NIR scene pairs with full
//! semantic masks and depth, degraded by the atmospheric scattering model
//! `I = J·t + A·(1−t)` with `t = exp(−β·d)` so that ground truth exists for
//! every experiment.
//!
//! Scenes are layered landscapes: sky above a horizon, receding ground,
//! buildings, vegetation patches, an optional water band and vehicles near
//! the camera. Vegetation and water are deliberately close in visible color
//! but far apart in NIR response, which encodes the modality gap the fusion
//! framework has to bridge.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_model::{
    write_manifest, save_pair, Condition, DepthMap, HazeParams, Image, ManifestEntry, ScenePair,
    SemanticMask, CLASS_BUILDING, CLASS_GROUND, CLASS_SKY, CLASS_VEGETATION, CLASS_VEHICLE,
    CLASS_WATER, NUM_CLASSES,
};
use crate::error::{Error, Result};

/// Depth assigned to sky pixels; also the corpus-wide maximum (scene units).
pub const DEPTH_MAX: f64 = 5.0;
/// Nearest ground depth at the bottom image row.
pub const DEPTH_MIN: f64 = 0.2;
/// Default visible-to-NIR scattering coefficient ratio.
pub const DEFAULT_NIR_BETA_RATIO: f64 = 0.3;
/// Default scattering coefficient range for corpus synthesis.
pub const DEFAULT_BETA_RANGE: (f64, f64) = (0.4, 1.2);

/// Parameters controlling one procedural scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecipe {
    pub seed: u64,
    /// Square output size in pixels.
    pub size: usize,
    pub building_count: usize,
    pub vegetation_count: usize,
    pub vehicle_count: usize,
    pub water_band: bool,
    /// Per-class multiplicative factor mapping visible luminance to NIR.
    pub nir_response: [f64; NUM_CLASSES],
}

impl SceneRecipe {
    pub fn new(seed: u64, size: usize) -> Self {
        Self {
            seed,
            size,
            building_count: 2,
            vegetation_count: 2,
            vehicle_count: 1,
            water_band: true,
            // sky, ground, building, vegetation, water, vehicle
            nir_response: [0.22, 1.05, 0.95, 1.9, 0.25, 0.7],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 64 {
            return Err(Error::data(format!(
                "scene size must be >= 64, got {}",
                self.size
            )));
        }
        if !self.nir_response.iter().all(|&f| f > 0.0 && f.is_finite()) {
            return Err(Error::data("nir_response factors must be positive"));
        }
        if self.nir_response[CLASS_VEGETATION as usize] <= self.nir_response[CLASS_WATER as usize] {
            return Err(Error::data(
                "nir_response must keep vegetation brighter than water in NIR",
            ));
        }
        Ok(())
    }
}

/// Seeded band-limited value noise: random lattice values interpolated
/// bilinearly, output in [-1, 1].
struct ValueNoise {
    cell: usize,
    grid_w: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, size: usize, cell: usize) -> Self {
        let grid_w = size / cell + 2;
        let values = (0..grid_w * grid_w).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self { cell, grid_w, values }
    }

    fn at(&self, y: usize, x: usize) -> f64 {
        let fy = y as f64 / self.cell as f64;
        let fx = x as f64 / self.cell as f64;
        let (iy, ix) = (fy as usize, fx as usize);
        let (ty, tx) = (fy - iy as f64, fx - ix as f64);
        let v = |gy: usize, gx: usize| self.values[gy * self.grid_w + gx];
        let top = v(iy, ix) * (1.0 - tx) + v(iy, ix + 1) * tx;
        let bot = v(iy + 1, ix) * (1.0 - tx) + v(iy + 1, ix + 1) * tx;
        top * (1.0 - ty) + bot * ty
    }
}

fn luminance(rgb: [f64; 3]) -> f64 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// Visible base color per class. Vegetation and water are intentionally
/// similar so visible-only segmentation stays ambiguous between them.
fn base_color(class: u8, rng_tint: f64) -> [f64; 3] {
    match class {
        CLASS_SKY => [0.62 + 0.05 * rng_tint, 0.72 + 0.04 * rng_tint, 0.88],
        CLASS_GROUND => [0.45, 0.40 + 0.04 * rng_tint, 0.33],
        CLASS_BUILDING => [0.52, 0.50, 0.50 + 0.05 * rng_tint],
        CLASS_VEGETATION => [0.21, 0.345 + 0.02 * rng_tint, 0.24],
        CLASS_WATER => [0.22, 0.335 + 0.02 * rng_tint, 0.28],
        CLASS_VEHICLE => [0.42 + 0.1 * rng_tint, 0.30, 0.28],
        _ => unreachable!("unknown class"),
    }
}

/// Per-class texture amplitude in the visible channel.
fn texture_amp(class: u8) -> f64 {
    match class {
        CLASS_SKY => 0.02,
        CLASS_GROUND => 0.07,
        CLASS_BUILDING => 0.05,
        CLASS_VEGETATION => 0.09,
        CLASS_WATER => 0.03,
        CLASS_VEHICLE => 0.05,
        _ => 0.0,
    }
}

/// Renders a clear pair with full semantic mask and depth map.
///
/// Deterministic: equal recipes produce byte-identical outputs.
pub fn render_scene(recipe: &SceneRecipe) -> Result<ScenePair> {
    recipe.validate()?;
    let s = recipe.size;
    let hw = s * s;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);

    let horizon = (s as f64 * rng.gen_range(0.30..0.45)) as usize;
    let ground_depth = |y: usize| -> f64 {
        let t = (y as f64 - horizon as f64) / (s as f64 - 1.0 - horizon as f64);
        DEPTH_MIN + (4.8 - DEPTH_MIN) * (1.0 - t)
    };

    let mut labels = vec![CLASS_SKY; hw];
    let mut depth = vec![DEPTH_MAX; hw];

    // Ground plane below the horizon.
    for y in horizon..s {
        for x in 0..s {
            labels[y * s + x] = CLASS_GROUND;
            depth[y * s + x] = ground_depth(y);
        }
    }

    // Water band in the mid-ground.
    if recipe.water_band {
        let y0 = horizon + (s - horizon) / 5 + rng.gen_range(0..(s - horizon) / 6 + 1);
        let band = ((s - horizon) / 5).max(3);
        for y in y0..(y0 + band).min(s) {
            for x in 0..s {
                labels[y * s + x] = CLASS_WATER;
            }
        }
    }

    // Buildings rise from just below the horizon (far scenery).
    for _ in 0..recipe.building_count {
        let bw = rng.gen_range(s / 10..s / 4);
        let bh = rng.gen_range(s / 8..s / 3);
        let x0 = rng.gen_range(0..s - bw);
        let base = horizon + rng.gen_range(1..(s - horizon) / 4);
        let d = ground_depth(base);
        for y in base.saturating_sub(bh)..base {
            for x in x0..x0 + bw {
                labels[y * s + x] = CLASS_BUILDING;
                depth[y * s + x] = d;
            }
        }
    }

    // Vegetation blobs anywhere on the ground.
    for _ in 0..recipe.vegetation_count {
        let ry = rng.gen_range(s / 14..s / 6) as f64;
        let rx = rng.gen_range(s / 12..s / 5) as f64;
        let cy = rng.gen_range(horizon + 2..s - 4) as f64;
        let cx = rng.gen_range(0..s) as f64;
        let base = ((cy + ry) as usize).min(s - 1);
        let d = ground_depth(base);
        for y in 0..s {
            for x in 0..s {
                let dy = (y as f64 - cy) / ry;
                let dx = (x as f64 - cx) / rx;
                if dy * dy + dx * dx <= 1.0 && y >= horizon.saturating_sub(s / 10) {
                    labels[y * s + x] = CLASS_VEGETATION;
                    depth[y * s + x] = d;
                }
            }
        }
    }

    // Vehicles close to the camera.
    for _ in 0..recipe.vehicle_count {
        let vw = rng.gen_range(s / 12..s / 7);
        let vh = rng.gen_range(s / 20..s / 12).max(2);
        let y0 = rng.gen_range(s - s / 5..s - vh);
        let x0 = rng.gen_range(0..s - vw);
        let d = ground_depth(y0 + vh);
        for y in y0..y0 + vh {
            for x in x0..x0 + vw {
                labels[y * s + x] = CLASS_VEHICLE;
                depth[y * s + x] = d;
            }
        }
    }

    // Shared procedural textures give both modalities correlated gradients.
    let tint = rng.gen_range(-1.0..=1.0);
    let noise_fine = ValueNoise::new(&mut rng, s, 3);
    let noise_coarse = ValueNoise::new(&mut rng, s, 9);

    let mut vis = vec![0.0; 3 * hw];
    let mut nir = vec![0.0; hw];
    for y in 0..s {
        for x in 0..s {
            let class = labels[y * s + x];
            let mut rgb = base_color(class, tint);
            let mut tex = texture_amp(class)
                * (0.65 * noise_fine.at(y, x) + 0.35 * noise_coarse.at(y, x));
            if class == CLASS_BUILDING {
                // window grid for strong, regular gradients
                let grid = ((x % 6 < 3) != (y % 6 < 3)) as i32 as f64;
                tex += 0.10 * (grid - 0.5);
            }
            if class == CLASS_SKY {
                // brighten toward the horizon
                let g = y as f64 / (horizon.max(1) as f64);
                for c in rgb.iter_mut() {
                    *c += 0.06 * g;
                }
            }
            for (c, base) in rgb.iter().enumerate() {
                vis[(c * s + y) * s + x] = (base + tex).clamp(0.005, 0.995);
            }
            let lum = luminance([
                vis[y * s + x],
                vis[(s + y) * s + x],
                vis[(2 * s + y) * s + x],
            ]);
            let resp = recipe.nir_response[class as usize];
            nir[y * s + x] = (resp * lum + 0.6 * tex).clamp(0.005, 0.995);
        }
    }

    let pair = ScenePair {
        id: format!("scene_{:08x}", recipe.seed),
        visible: Image::new(s, s, 3, vis)?,
        nir: Image::new(s, s, 1, nir)?,
        mask: Some(SemanticMask::new(s, s, labels)?),
        depth: Some(DepthMap::new(s, s, depth)?),
        condition: Condition::Clear,
        haze_params: None,
    };
    pair.validate()?;
    Ok(pair)
}

/// Transmission map `t = exp(−β·d)`, elementwise over the depth map.
pub fn transmission(depth: &DepthMap, beta: f64) -> Result<Vec<f64>> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::data(format!("beta must be >= 0, got {beta}")));
    }
    Ok(depth.data().iter().map(|&d| (-beta * d).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Vis,
    Nir,
}

/// Applies the scattering model `I = J·t + A·(1−t)` to a clear image.
///
/// The NIR branch uses `β_nir = nir_beta_ratio · β_vis`; the output stays in
/// `[min(J,A), max(J,A)]` per pixel by construction (convex blend).
pub fn apply_haze(
    clear: &Image,
    depth: &DepthMap,
    params: &HazeParams,
    modality: Modality,
) -> Result<Image> {
    params.validate()?;
    if clear.height() != depth.height() || clear.width() != depth.width() {
        return Err(Error::shape("depth map size differs from image".to_string()));
    }
    let beta = match modality {
        Modality::Vis => params.beta_vis,
        Modality::Nir => params.nir_beta_ratio * params.beta_vis,
    };
    let t = transmission(depth, beta)?;
    let (h, w, c) = (clear.height(), clear.width(), clear.channels());
    let hw = h * w;
    let mut out = vec![0.0; c * hw];
    for ch in 0..c {
        let a = match modality {
            Modality::Vis => params.airlight(ch),
            Modality::Nir => params.airlight_nir(),
        };
        let plane = clear.plane(ch);
        for i in 0..hw {
            out[ch * hw + i] = plane[i] * t[i] + a * (1.0 - t[i]);
        }
    }
    Image::new(h, w, c, out)
}

/// Applies haze to both modalities of a clear pair, keeping mask and depth.
pub fn hazy_counterpart(clear: &ScenePair, params: &HazeParams, id: String) -> Result<ScenePair> {
    let depth = clear
        .depth
        .as_ref()
        .ok_or_else(|| Error::data("clear pair must carry depth to synthesize haze"))?;
    let pair = ScenePair {
        id,
        visible: apply_haze(&clear.visible, depth, params, Modality::Vis)?,
        nir: apply_haze(&clear.nir, depth, params, Modality::Nir)?,
        mask: clear.mask.clone(),
        depth: clear.depth.clone(),
        condition: Condition::Haze,
        haze_params: Some(params.clone()),
    };
    pair.validate()?;
    Ok(pair)
}

/// Options for [`synthesize_corpus`].
#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub count: usize,
    pub seed: u64,
    pub size: usize,
    pub beta_range: (f64, f64),
    pub nir_beta_ratio: f64,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            size: 64,
            beta_range: DEFAULT_BETA_RANGE,
            nir_beta_ratio: DEFAULT_NIR_BETA_RATIO,
        }
    }
}

/// Per-sample RNG derived solely from (corpus seed, sample index).
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Generates one clear/hazy scene pair couple in memory.
pub fn synthesize_sample(opts: &CorpusOptions, index: usize) -> Result<(ScenePair, ScenePair)> {
    let mut rng = sample_rng(opts.seed, index as u64);
    let mut recipe = SceneRecipe::new(rng.gen::<u64>(), opts.size);
    recipe.building_count = rng.gen_range(1..=3);
    recipe.vegetation_count = rng.gen_range(1..=3);
    recipe.vehicle_count = rng.gen_range(1..=2);

    let mut clear = render_scene(&recipe)?;
    clear.id = format!("scene_{index:04}_clear");

    let base_a = rng.gen_range(0.7..=0.95);
    let atmospheric_light = (0..3)
        .map(|_| (base_a + rng.gen_range(-0.03..=0.03f64)).clamp(0.0, 1.0))
        .collect();
    let beta_vis = rng.gen_range(opts.beta_range.0..=opts.beta_range.1);
    let params = HazeParams {
        atmospheric_light,
        beta_vis,
        nir_beta_ratio: opts.nir_beta_ratio,
    };
    let hazy = hazy_counterpart(&clear, &params, format!("scene_{index:04}_haze"))?;
    Ok((clear, hazy))
}

/// Writes `count` clear pairs plus their hazy counterparts and a JSONL
/// manifest (`manifest.jsonl`) into `out_dir`. Fully deterministic in
/// (count, seed, beta_range, size, ratio).
pub fn synthesize_corpus(opts: &CorpusOptions, out_dir: &Path) -> Result<Vec<ManifestEntry>> {
    if opts.count < 1 {
        return Err(Error::data("corpus count must be >= 1"));
    }
    if !(opts.beta_range.0 >= 0.0 && opts.beta_range.1 >= opts.beta_range.0) {
        return Err(Error::data("invalid beta range"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(opts.count * 2);
    for index in 0..opts.count {
        let (clear, hazy) = synthesize_sample(opts, index)?;
        entries.push(save_pair(&clear, out_dir)?);
        entries.push(save_pair(&hazy, out_dir)?);
    }
    write_manifest(&entries, &out_dir.join("manifest.jsonl"))?;
    Ok(entries)
}

/// Global RMS contrast of the luminance plane (population std).
pub fn rms_contrast(img: &Image) -> f64 {
    let lum = img.luminance();
    let n = lum.len() as f64;
    let mean = lum.iter().sum::<f64>() / n;
    (lum.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}
