//! Domain types, image/label file formats, corpus manifest and deterministic
//! loading shared by every other module.
//!
//! Intensities are stored on disk as 8-bit PNG and handled in memory as
//! `f64` in `[0, 1]` (pixel / 255). Depth maps are 16-bit PNG with scale
//! `depth = value / 1000` scene units.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of semantic classes: sky, ground, buildings, vegetation, water, vehicles.
pub const NUM_CLASSES: usize = 6;
/// Label value for unannotated pixels; excluded from losses and metrics.
pub const IGNORE_LABEL: u8 = 255;

pub const CLASS_SKY: u8 = 0;
pub const CLASS_GROUND: u8 = 1;
pub const CLASS_BUILDING: u8 = 2;
pub const CLASS_VEGETATION: u8 = 3;
pub const CLASS_WATER: u8 = 4;
pub const CLASS_VEHICLE: u8 = 5;

pub const CLASS_NAMES: [&str; NUM_CLASSES] =
    ["sky", "ground", "building", "vegetation", "water", "vehicle"];

/// A planar (channel-major) floating point image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image and validates the type invariants.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if !(channels == 1 || channels == 3) {
            return Err(Error::data(format!("channels must be 1 or 3, got {channels}")));
        }
        if height < 16 || width < 16 {
            return Err(Error::data(format!(
                "image must be at least 16x16, got {height}x{width}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "image buffer has {} values, expected {}",
                data.len(),
                height * width * channels
            )));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::data("image intensities must be finite and in [0,1]"));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Raw planar buffer, channel-major: `data[c*H*W + y*W + x]`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// One channel plane as a slice.
    pub fn plane(&self, c: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[c * hw..(c + 1) * hw]
    }

    /// Per-pixel luminance; identity for single-channel images.
    pub fn luminance(&self) -> Vec<f64> {
        let hw = self.height * self.width;
        if self.channels == 1 {
            return self.data.clone();
        }
        let mut out = vec![0.0; hw];
        for i in 0..hw {
            out[i] = 0.299 * self.data[i] + 0.587 * self.data[hw + i] + 0.114 * self.data[2 * hw + i];
        }
        out
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Per-pixel class labels over [`NUM_CLASSES`] categories plus [`IGNORE_LABEL`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    height: usize,
    width: usize,
    labels: Vec<u8>,
}

impl SemanticMask {
    pub fn new(height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::shape(format!(
                "mask buffer has {} labels, expected {}",
                labels.len(),
                height * width
            )));
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&l| l as usize >= NUM_CLASSES && l != IGNORE_LABEL)
        {
            return Err(Error::data(format!(
                "mask label {bad} outside {{0..{}}} ∪ {{{IGNORE_LABEL}}}",
                NUM_CLASSES - 1
            )));
        }
        Ok(Self { height, width, labels })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Distinct non-ignore classes present in the mask.
    pub fn classes_present(&self) -> BTreeSet<u8> {
        self.labels
            .iter()
            .copied()
            .filter(|&l| l != IGNORE_LABEL)
            .collect()
    }
}

/// Per-pixel scene distance in scene units (non-negative).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape("depth buffer size mismatch".to_string()));
        }
        if !data.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::data("depth values must be finite and >= 0"));
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Atmospheric scattering parameters for one synthesized hazy sample.
///
/// `atmospheric_light` holds either one shared value or one value per
/// visible channel. The NIR branch uses the channel mean and the scaled
/// coefficient `nir_beta_ratio * beta_vis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazeParams {
    pub atmospheric_light: Vec<f64>,
    pub beta_vis: f64,
    pub nir_beta_ratio: f64,
}

impl HazeParams {
    pub fn validate(&self) -> Result<()> {
        if self.atmospheric_light.is_empty() || self.atmospheric_light.len() > 3 {
            return Err(Error::data("atmospheric_light must have 1..=3 entries"));
        }
        if !self
            .atmospheric_light
            .iter()
            .all(|a| a.is_finite() && (0.0..=1.0).contains(a))
        {
            return Err(Error::data("atmospheric_light must be in [0,1]"));
        }
        if !(self.beta_vis.is_finite() && self.beta_vis >= 0.0) {
            return Err(Error::data("beta_vis must be >= 0"));
        }
        if !(self.nir_beta_ratio.is_finite()
            && self.nir_beta_ratio > 0.0
            && self.nir_beta_ratio <= 1.0)
        {
            return Err(Error::data("nir_beta_ratio must be in (0,1]"));
        }
        Ok(())
    }

    /// Airlight for a given visible channel (clamped to the provided list).
    pub fn airlight(&self, channel: usize) -> f64 {
        let i = channel.min(self.atmospheric_light.len() - 1);
        self.atmospheric_light[i]
    }

    /// Airlight used for the single NIR channel: mean over visible entries.
    pub fn airlight_nir(&self) -> f64 {
        self.atmospheric_light.iter().sum::<f64>() / self.atmospheric_light.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Clear,
    Haze,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::Clear => write!(f, "clear"),
            Condition::Haze => write!(f, "haze"),
        }
    }
}

/// Pixel-aligned visible/NIR pair with optional annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub id: String,
    pub visible: Image,
    pub nir: Image,
    pub mask: Option<SemanticMask>,
    pub depth: Option<DepthMap>,
    pub condition: Condition,
    pub haze_params: Option<HazeParams>,
}

impl ScenePair {
    pub fn validate(&self) -> Result<()> {
        if self.visible.channels() != 3 {
            return Err(Error::data("visible image must have 3 channels"));
        }
        if self.nir.channels() != 1 {
            return Err(Error::data("nir image must have 1 channel"));
        }
        if !self.visible.same_size(&self.nir) {
            return Err(Error::shape(format!(
                "modalities differ in size: visible {}x{}, nir {}x{}",
                self.visible.height(),
                self.visible.width(),
                self.nir.height(),
                self.nir.width()
            )));
        }
        if let Some(mask) = &self.mask {
            if mask.height() != self.visible.height() || mask.width() != self.visible.width() {
                return Err(Error::shape("mask size differs from images".to_string()));
            }
        }
        if let Some(depth) = &self.depth {
            if depth.height() != self.visible.height() || depth.width() != self.visible.width() {
                return Err(Error::shape("depth size differs from images".to_string()));
            }
        }
        if let Some(hp) = &self.haze_params {
            hp.validate()?;
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.visible.height()
    }

    pub fn width(&self) -> usize {
        self.visible.width()
    }
}

/// One line of the JSONL corpus manifest. Paths are relative to the
/// manifest location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub vis: String,
    pub nir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    pub condition: Condition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub haze_params: Option<HazeParams>,
}

fn open_png(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    image::open(path).map_err(|e| Error::data(format!("failed to decode {}: {e}", path.display())))
}

/// Reads an 8-bit PNG into a planar [0,1] image, checking the channel count.
pub fn load_image_png(path: &Path, channels: usize) -> Result<Image> {
    let dynimg = open_png(path)?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let mut data = vec![0.0; h * w * channels];
    match channels {
        3 => {
            let rgb = dynimg.to_rgb8();
            for (x, y, p) in rgb.enumerate_pixels() {
                for c in 0..3 {
                    data[(c * h + y as usize) * w + x as usize] = p.0[c] as f64 / 255.0;
                }
            }
        }
        1 => {
            let gray = dynimg.to_luma8();
            for (x, y, p) in gray.enumerate_pixels() {
                data[y as usize * w + x as usize] = p.0[0] as f64 / 255.0;
            }
        }
        _ => return Err(Error::data("unsupported channel count")),
    }
    Image::new(h, w, channels, data)
}

fn load_mask_png(path: &Path) -> Result<SemanticMask> {
    let dynimg = open_png(path)?;
    let gray = dynimg.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let labels: Vec<u8> = gray.pixels().map(|p| p.0[0]).collect();
    SemanticMask::new(h, w, labels)
}

fn load_depth_png(path: &Path) -> Result<DepthMap> {
    let dynimg = open_png(path)?;
    let gray = dynimg.to_luma16();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let data: Vec<f64> = gray.pixels().map(|p| p.0[0] as f64 / 1000.0).collect();
    DepthMap::new(h, w, data)
}

pub fn save_image_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let quant = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    match img.channels() {
        3 => {
            let mut buf = image::RgbImage::new(w as u32, h as u32);
            for y in 0..h {
                for x in 0..w {
                    buf.put_pixel(
                        x as u32,
                        y as u32,
                        image::Rgb([
                            quant(img.get(0, y, x)),
                            quant(img.get(1, y, x)),
                            quant(img.get(2, y, x)),
                        ]),
                    );
                }
            }
            buf.save(path)
                .map_err(|e| Error::data(format!("failed to write {}: {e}", path.display())))
        }
        1 => {
            let mut buf = image::GrayImage::new(w as u32, h as u32);
            for y in 0..h {
                for x in 0..w {
                    buf.put_pixel(x as u32, y as u32, image::Luma([quant(img.get(0, y, x))]));
                }
            }
            buf.save(path)
                .map_err(|e| Error::data(format!("failed to write {}: {e}", path.display())))
        }
        _ => Err(Error::data("unsupported channel count")),
    }
}

fn save_mask_png(mask: &SemanticMask, path: &Path) -> Result<()> {
    let mut buf = image::GrayImage::new(mask.width() as u32, mask.height() as u32);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            buf.put_pixel(x as u32, y as u32, image::Luma([mask.get(y, x)]));
        }
    }
    buf.save(path)
        .map_err(|e| Error::data(format!("failed to write {}: {e}", path.display())))
}

fn save_depth_png(depth: &DepthMap, path: &Path) -> Result<()> {
    let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        depth.width() as u32,
        depth.height() as u32,
    );
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let v = (depth.get(y, x) * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16;
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    buf.save(path)
        .map_err(|e| Error::data(format!("failed to write {}: {e}", path.display())))
}

/// Loads and validates one [`ScenePair`] referenced by a manifest entry.
/// Paths in the entry are resolved relative to `base_dir`.
pub fn load_pair(entry: &ManifestEntry, base_dir: &Path) -> Result<ScenePair> {
    let visible = load_image_png(&base_dir.join(&entry.vis), 3)?;
    let nir = load_image_png(&base_dir.join(&entry.nir), 1)?;
    let mask = entry
        .mask
        .as_ref()
        .map(|p| load_mask_png(&base_dir.join(p)))
        .transpose()?;
    let depth = entry
        .depth
        .as_ref()
        .map(|p| load_depth_png(&base_dir.join(p)))
        .transpose()?;
    let pair = ScenePair {
        id: entry.id.clone(),
        visible,
        nir,
        mask,
        depth,
        condition: entry.condition,
        haze_params: entry.haze_params.clone(),
    };
    pair.validate()?;
    Ok(pair)
}

/// Writes the pair's files into `dir` and returns a manifest entry with
/// paths relative to `dir`. `load_pair(save_pair(p))` reproduces `p` up to
/// 8-bit quantization (|Δ| ≤ 1/510 per intensity; 1/2000 per depth unit).
pub fn save_pair(pair: &ScenePair, dir: &Path) -> Result<ManifestEntry> {
    pair.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let vis = format!("{}_vis.png", pair.id);
    let nir = format!("{}_nir.png", pair.id);
    save_image_png(&pair.visible, &dir.join(&vis))?;
    save_image_png(&pair.nir, &dir.join(&nir))?;
    let mask = match &pair.mask {
        Some(m) => {
            let name = format!("{}_mask.png", pair.id);
            save_mask_png(m, &dir.join(&name))?;
            Some(name)
        }
        None => None,
    };
    let depth = match &pair.depth {
        Some(d) => {
            let name = format!("{}_depth.png", pair.id);
            save_depth_png(d, &dir.join(&name))?;
            Some(name)
        }
        None => None,
    };
    Ok(ManifestEntry {
        id: pair.id.clone(),
        vis,
        nir,
        mask,
        depth,
        condition: pair.condition,
        haze_params: pair.haze_params.clone(),
    })
}

/// Reads a JSONL manifest; one [`ManifestEntry`] per line, blank lines skipped.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| Error::data(format!("manifest line {}: {e}", i + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| Error::data(format!("manifest serialization: {e}")))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_image(h: usize, w: usize, c: usize) -> Image {
        let data: Vec<f64> = (0..h * w * c)
            .map(|i| (i % 256) as f64 / 255.0)
            .collect();
        Image::new(h, w, c, data).unwrap()
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(Image::new(16, 16, 2, vec![0.0; 16 * 16 * 2]).is_err());
    }

    #[test]
    fn rejects_out_of_range_intensity() {
        let mut data = vec![0.5; 16 * 16];
        data[3] = 1.5;
        assert!(Image::new(16, 16, 1, data).is_err());
    }

    #[test]
    fn rejects_mask_label_out_of_range() {
        // label 7 is neither a class nor the ignore value
        assert!(SemanticMask::new(16, 16, vec![7; 256]).is_err());
        assert!(SemanticMask::new(16, 16, vec![IGNORE_LABEL; 256]).is_ok());
    }

    #[test]
    fn rejects_size_mismatch_between_modalities() {
        let pair = ScenePair {
            id: "p".into(),
            visible: ramp_image(16, 16, 3),
            nir: ramp_image(16, 32, 1),
            mask: None,
            depth: None,
            condition: Condition::Clear,
            haze_params: None,
        };
        assert!(matches!(pair.validate(), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn eight_bit_rescale_rule() {
        let dir = tempfile::tempdir().unwrap();
        let mut vis = Image::zeros(16, 16, 3).unwrap();
        vis.set(0, 0, 0, 128.0 / 255.0);
        let pair = ScenePair {
            id: "q".into(),
            visible: vis,
            nir: ramp_image(16, 16, 1),
            mask: None,
            depth: None,
            condition: Condition::Clear,
            haze_params: None,
        };
        let entry = save_pair(&pair, dir.path()).unwrap();
        let loaded = load_pair(&entry, dir.path()).unwrap();
        let v = loaded.visible.get(0, 0, 0);
        assert!((v - 0.501_960_784).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn pair_without_mask_has_no_mask_field() {
        let dir = tempfile::tempdir().unwrap();
        let pair = ScenePair {
            id: "plain".into(),
            visible: ramp_image(16, 16, 3),
            nir: ramp_image(16, 16, 1),
            mask: None,
            depth: None,
            condition: Condition::Clear,
            haze_params: None,
        };
        let entry = save_pair(&pair, dir.path()).unwrap();
        assert!(entry.mask.is_none());
        let json = serde_json::to_string(&entry).unwrap();
        assert!(!json.contains("\"mask\""));
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let pair = ScenePair {
            id: "det".into(),
            visible: ramp_image(32, 24, 3),
            nir: ramp_image(32, 24, 1),
            mask: Some(SemanticMask::new(32, 24, vec![2; 32 * 24]).unwrap()),
            depth: Some(DepthMap::new(32, 24, vec![1.25; 32 * 24]).unwrap()),
            condition: Condition::Clear,
            haze_params: None,
        };
        save_pair(&pair, dir_a.path()).unwrap();
        save_pair(&pair, dir_b.path()).unwrap();
        for name in ["det_vis.png", "det_nir.png", "det_mask.png", "det_depth.png"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between saves");
        }
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![
            ManifestEntry {
                id: "a".into(),
                vis: "a_vis.png".into(),
                nir: "a_nir.png".into(),
                mask: None,
                depth: None,
                condition: Condition::Clear,
                haze_params: None,
            },
            ManifestEntry {
                id: "b".into(),
                vis: "b_vis.png".into(),
                nir: "b_nir.png".into(),
                mask: Some("b_mask.png".into()),
                depth: Some("b_depth.png".into()),
                condition: Condition::Haze,
                haze_params: Some(HazeParams {
                    atmospheric_light: vec![0.8, 0.82, 0.85],
                    beta_vis: 0.9,
                    nir_beta_ratio: 0.3,
                }),
            },
        ];
        let path = dir.path().join("manifest.jsonl");
        write_manifest(&entries, &path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(entries, loaded);
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let entry = ManifestEntry {
            id: "ghost".into(),
            vis: "ghost_vis.png".into(),
            nir: "ghost_nir.png".into(),
            mask: None,
            depth: None,
            condition: Condition::Clear,
            haze_params: None,
        };
        assert!(matches!(
            load_pair(&entry, dir.path()),
            Err(Error::MissingFile(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn load_save_identity_up_to_quantization(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = 16 + (seed as usize % 3) * 8;
            let w = 16 + (seed as usize % 2) * 16;
            let vis_data: Vec<f64> = (0..h * w * 3).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let nir_data: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let labels: Vec<u8> = (0..h * w)
                .map(|_| if rng.gen_bool(0.1) { IGNORE_LABEL } else { rng.gen_range(0..NUM_CLASSES as u8) })
                .collect();
            let pair = ScenePair {
                id: format!("rt{seed}"),
                visible: Image::new(h, w, 3, vis_data).unwrap(),
                nir: Image::new(h, w, 1, nir_data).unwrap(),
                mask: Some(SemanticMask::new(h, w, labels).unwrap()),
                depth: None,
                condition: Condition::Clear,
                haze_params: None,
            };
            let dir = tempfile::tempdir().unwrap();
            let entry = save_pair(&pair, dir.path()).unwrap();
            let loaded = load_pair(&entry, dir.path()).unwrap();
            let max_err = pair
                .visible
                .data()
                .iter()
                .chain(pair.nir.data())
                .zip(loaded.visible.data().iter().chain(loaded.nir.data()))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            prop_assert!(max_err <= 1.0 / 510.0 + 1e-12, "max quantization error {max_err}");
            prop_assert_eq!(pair.mask, loaded.mask);
        }
    }
}
