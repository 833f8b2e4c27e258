//! Minimal static plotting: per-metric histograms rendered directly into
//! PNG images (no plotting dependency).

use std::path::Path;

use crate::data_model::Image;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

const PLOT_W: usize = 480;
const PLOT_H: usize = 320;
const MARGIN: usize = 24;

/// Renders a histogram of `values` into a PNG.
pub fn histogram_png(values: &[f64], bins: usize, path: &Path) -> Result<()> {
    if values.is_empty() || bins == 0 {
        return Err(Error::data("histogram needs values and at least one bin"));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if (hi - lo).abs() < 1e-12 { 1.0 } else { hi - lo };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / span) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let peak = *counts.iter().max().unwrap() as f64;

    // White canvas, dark bars, plain axis lines.
    let mut data = vec![1.0f64; PLOT_W * PLOT_H * 3];
    let mut put = |x: usize, y: usize, v: f64| {
        let i = (y * PLOT_W + x) * 3;
        data[i] = v;
        data[i + 1] = v;
        data[i + 2] = v * 1.3_f64.min(1.0);
    };
    for x in MARGIN..PLOT_W - MARGIN {
        put(x, PLOT_H - MARGIN, 0.0);
    }
    for y in MARGIN..PLOT_H - MARGIN {
        put(MARGIN, y, 0.0);
    }
    let plot_w = PLOT_W - 2 * MARGIN;
    let plot_h = PLOT_H - 2 * MARGIN;
    for (b, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let h = ((c as f64 / peak) * plot_h as f64).round() as usize;
        let x0 = MARGIN + 1 + b * plot_w / bins;
        let x1 = MARGIN + ((b + 1) * plot_w / bins).max(b * plot_w / bins + 2);
        for x in x0..x1.min(PLOT_W - MARGIN) {
            for y in (PLOT_H - MARGIN - h)..(PLOT_H - MARGIN) {
                put(x, y, 0.25);
            }
        }
    }
    let img = Image::new(PLOT_H, PLOT_W, 3, data)?;
    crate::data_model::save_image_png(&img, path)
}

/// One histogram per aggregate metric in the report.
pub fn report_plots(report: &MetricReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let metrics: Vec<String> = report.aggregate.keys().cloned().collect();
    for metric in metrics {
        let values: Vec<f64> = report
            .per_image
            .iter()
            .filter_map(|(_, m)| m.get(&metric).copied())
            .collect();
        if values.is_empty() {
            continue;
        }
        histogram_png(&values, 12, &dir.join(format!("{metric}.png")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_writes_a_readable_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.png");
        let values: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        histogram_png(&values, 10, &path).unwrap();
        let img = crate::data_model::load_image_png(&path, 3).unwrap();
        assert_eq!(img.width(), PLOT_W);
        assert_eq!(img.height(), PLOT_H);
        assert!(histogram_png(&[], 10, &path).is_err());
    }
}
