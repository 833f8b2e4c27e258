//! Evaluation: runs inference over a validation split and assembles the
//! metric report used by the tables and ablation comparisons.

use std::collections::BTreeMap;
use std::path::Path;

use crate::data_model::Image;
use crate::error::{Error, Result};
use crate::metrics::filters::{sobel, Grid};
use crate::metrics::{
    fit_fog_model, fit_nss_model, fog_density, fusion_mutual_information, nss_score, q_abf,
    save_model, segmentation_metrics, ssim, vif, FogModel, MetricReport, NssModel,
};
use crate::pipeline::HsvfModel;

use super::train::Scene;

/// Mean Sobel gradient magnitude of the luminance plane (texture proxy).
pub fn gradient_energy(img: &Image) -> f64 {
    let grid = Grid::new(img.height(), img.width(), img.luminance());
    let (gx, gy) = sobel(&grid);
    let n = gx.data.len() as f64;
    gx.data
        .iter()
        .zip(&gy.data)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .sum::<f64>()
        / n
}

/// Fits the fog-density and natural-statistics models on the clear split
/// and writes them to `out_dir` as `fog_model.json` / `nss_model.json`.
pub fn fit_metric_models(clear: &[Image], out_dir: &Path) -> Result<(FogModel, NssModel)> {
    let fog = fit_fog_model(clear)?;
    let nss = fit_nss_model(clear)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    save_model(&fog, &out_dir.join("fog_model.json"))?;
    save_model(&nss, &out_dir.join("nss_model.json"))?;
    Ok((fog, nss))
}

/// Per-scene metrics over a validation split. Rows cover the final output,
/// both stream intermediates, and the hazy input baselines.
pub fn evaluate_model(
    model: &HsvfModel,
    scenes: &[Scene],
    fog: &FogModel,
    nss: &NssModel,
) -> Result<MetricReport> {
    if scenes.is_empty() {
        return Err(Error::data("evaluation split is empty"));
    }
    let mut rows = Vec::with_capacity(scenes.len());
    for scene in scenes {
        let out = model.infer(&scene.hazy)?;
        let gt = scene
            .hazy
            .mask
            .as_ref()
            .ok_or_else(|| Error::data(format!("scene {} has no mask", scene.hazy.id)))?;
        let seg = segmentation_metrics(&out.seg_pred, gt)?;

        let mut m = BTreeMap::new();
        m.insert("fog_hazy".to_string(), fog_density(&scene.hazy.visible, fog));
        m.insert("fog_final".to_string(), fog_density(&out.o_final, fog));
        m.insert("fog_sr".to_string(), fog_density(&out.o_sr, fog));
        m.insert("nss_hazy".to_string(), nss_score(&scene.hazy.visible, nss)?);
        m.insert("nss_final".to_string(), nss_score(&out.o_final, nss)?);
        m.insert(
            "mi_fusion".to_string(),
            fusion_mutual_information(&out.o_vf, &scene.hazy.visible, &scene.hazy.nir)?,
        );
        m.insert(
            "qabf_fusion".to_string(),
            q_abf(&scene.hazy.visible, &scene.hazy.nir, &out.o_vf)?,
        );
        m.insert("ssim_clear".to_string(), ssim(&out.o_final, &scene.clear.visible)?);
        m.insert("vif_clear".to_string(), vif(&scene.clear.visible, &out.o_final)?);
        m.insert("miou".to_string(), seg.miou);
        m.insert("pixel_acc".to_string(), seg.pixel_acc);
        m.insert("grad_energy_final".to_string(), gradient_energy(&out.o_final));
        m.insert("grad_energy_hazy".to_string(), gradient_energy(&scene.hazy.visible));
        rows.push((scene.hazy.id.clone(), m));
    }
    let report = MetricReport::from_rows(rows);
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_energy_orders_flat_below_textured() {
        let flat = Image::new(32, 32, 1, vec![0.5; 1024]).unwrap();
        let tex = Image::new(
            32,
            32,
            1,
            (0..1024).map(|i| (((i % 32) / 2 % 2) as f64)).collect(),
        )
        .unwrap();
        assert!(gradient_energy(&flat) < 1e-12);
        assert!(gradient_energy(&tex) > 0.5);
    }
}
