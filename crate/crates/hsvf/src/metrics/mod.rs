//! Quality metrics: SSIM, mutual information, VIF, Q_AB/F, a fog-density
//! surrogate, a natural-statistics score, mIoU and pixel accuracy, plus the
//! per-image / corpus-aggregated report type.

pub mod filters;
pub mod fog;
pub mod info;
pub mod linalg;
pub mod nss;
pub mod qabf;
pub mod seg;
pub mod ssim;
pub mod stats;
pub mod vif;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fog::{fit_fog_model, fog_density, load_model, save_model, FogModel};
pub use info::{entropy, fusion_mutual_information, mutual_information};
pub use nss::{fit_nss_model, nss_score, NssModel};
pub use qabf::q_abf;
pub use seg::{segmentation_metrics, SegScores};
pub use ssim::ssim;
pub use vif::vif;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Per-image metric values plus corpus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricReport {
    /// (image id, metric name → value), in evaluation order.
    pub per_image: Vec<(String, BTreeMap<String, f64>)>,
    pub aggregate: BTreeMap<String, MetricAggregate>,
}

impl MetricReport {
    /// Builds the report and its aggregates from per-image rows.
    pub fn from_rows(per_image: Vec<(String, BTreeMap<String, f64>)>) -> Self {
        let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (_, metrics) in &per_image {
            for (name, value) in metrics {
                grouped.entry(name.clone()).or_default().push(*value);
            }
        }
        let aggregate = grouped
            .into_iter()
            .map(|(name, values)| {
                let count = values.len();
                let mean = values.iter().sum::<f64>() / count as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / count as f64;
                (name, MetricAggregate { mean, std: var.sqrt(), count })
            })
            .collect();
        Self { per_image, aggregate }
    }

    /// Checks the aggregation identity: stored means match a recomputation
    /// from the per-image values within 1e-9.
    pub fn validate(&self) -> Result<()> {
        let recomputed = MetricReport::from_rows(self.per_image.clone());
        for (name, agg) in &self.aggregate {
            let re = recomputed
                .aggregate
                .get(name)
                .ok_or_else(|| Error::data(format!("aggregate {name} has no per-image values")))?;
            if (re.mean - agg.mean).abs() > 1e-9 || re.count != agg.count {
                return Err(Error::data(format!("aggregate {name} does not match per-image values")));
            }
        }
        Ok(())
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("report serialization: {e}")))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&json).map_err(|e| Error::data(format!("report parse: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_mean_matches_per_image_values() {
        let rows = vec![
            ("a".to_string(), BTreeMap::from([("m".to_string(), 1.0)])),
            ("b".to_string(), BTreeMap::from([("m".to_string(), 3.0)])),
        ];
        let report = MetricReport::from_rows(rows);
        assert_eq!(report.mean("m"), Some(2.0));
        assert_eq!(report.aggregate["m"].count, 2);
        report.validate().unwrap();
    }

    #[test]
    fn report_roundtrips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![(
            "x".to_string(),
            BTreeMap::from([("fog".to_string(), 0.5), ("mi".to_string(), 2.25)]),
        )];
        let report = MetricReport::from_rows(rows);
        let path = dir.path().join("report.json");
        report.save(&path).unwrap();
        assert_eq!(MetricReport::load(&path).unwrap(), report);
    }
}
