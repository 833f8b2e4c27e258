//! Training/evaluation configuration, loaded from a TOML file. Every
//! default mirrors the reference values where they exist; the schedule is
//! scaled down so a full run finishes on a desk machine.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::LossWeights;
use crate::visual_fusion::AttentionArm;

/// The four training stages, run in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Align,
    Recon,
    Fusion,
    Finetune,
}

impl Stage {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "align" => Ok(Self::Align),
            "recon" => Ok(Self::Recon),
            "fusion" => Ok(Self::Fusion),
            "finetune" => Ok(Self::Finetune),
            other => Err(Error::config(format!("unknown stage '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Align => "align",
            Self::Recon => "recon",
            Self::Fusion => "fusion",
            Self::Finetune => "finetune",
        }
    }

    /// The stage whose checkpoint must exist before this one runs.
    pub fn prerequisite(self) -> Option<Stage> {
        match self {
            Self::Align => None,
            Self::Recon => Some(Self::Align),
            Self::Fusion => Some(Self::Recon),
            Self::Finetune => Some(Self::Fusion),
        }
    }
}

/// Epochs per stage. The full-scale reference schedule is 200/400/400/200;
/// the defaults here are the same ratios at desk scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Epochs {
    pub align: usize,
    pub recon: usize,
    pub fusion: usize,
    pub finetune: usize,
}

impl Default for Epochs {
    fn default() -> Self {
        Self { align: 20, recon: 40, fusion: 40, finetune: 20 }
    }
}

impl Epochs {
    pub fn for_stage(&self, stage: Stage) -> usize {
        match stage {
            Stage::Align => self.align,
            Stage::Recon => self.recon,
            Stage::Fusion => self.fusion,
            Stage::Finetune => self.finetune,
        }
    }
}

/// Ablation switches. All off reproduces the full model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    /// Segmentation from the visible branch only (drops every NIR-side
    /// alignment term).
    pub visible_only: bool,
    /// Drop the content consistency term.
    pub disable_content_align: bool,
    /// Drop the cross-modal reconstruction terms.
    pub disable_cross_recon: bool,
    /// Attention arm: joint | self-only | cross-only | no-attention.
    pub attention_arm: String,
    /// Replace per-class region masks with a single image-level mask.
    pub image_level_disc: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            visible_only: false,
            disable_content_align: false,
            disable_cross_recon: false,
            attention_arm: "joint".to_string(),
            image_level_disc: false,
        }
    }
}

impl Ablation {
    pub fn arm(&self) -> Result<AttentionArm> {
        AttentionArm::parse(&self.attention_arm)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    /// Directory holding the corpus (`manifest.jsonl` plus PNGs).
    pub data_dir: PathBuf,
    /// Output directory for checkpoints, logs, metric models, reports.
    pub out_dir: PathBuf,
    /// Fraction of scenes held out for validation.
    pub val_fraction: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: Epochs,
    pub weights: LossWeights,
    pub ablation: Ablation,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            val_fraction: 0.2,
            batch_size: 4,
            learning_rate: 2e-4,
            epochs: Epochs::default(),
            weights: LossWeights::default(),
            ablation: Ablation::default(),
        }
    }
}

impl Config {
    /// Loads a TOML config; the `HSVF_SEED` environment variable overrides
    /// the file's seed when set.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Ok(s) = std::env::var("HSVF_SEED") {
            if let Ok(seed) = s.parse::<u64>() {
                self.seed = seed;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("align", self.epochs.align),
            ("recon", self.epochs.recon),
            ("fusion", self.epochs.fusion),
            ("finetune", self.epochs.finetune),
        ] {
            if e < 1 {
                return Err(Error::config(format!("epochs.{name} must be >= 1")));
            }
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(0.0 < self.val_fraction && self.val_fraction < 1.0) {
            return Err(Error::config("val_fraction must be in (0,1)"));
        }
        self.weights.validate()?;
        self.ablation.arm()?;
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.data_dir.join("manifest.jsonl")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_stage_chain_is_linear() {
        let cfg = Config::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(Stage::Finetune.prerequisite(), Some(Stage::Fusion));
        assert_eq!(Stage::Align.prerequisite(), None);
        assert_eq!(Stage::parse("recon").unwrap(), Stage::Recon);
        assert!(Stage::parse("warmup").is_err());
    }

    #[test]
    fn toml_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "seed = 9\nbatch_size = 2\n[epochs]\nalign = 3\n[ablation]\nattention_arm = \"self-only\"\n",
        )
        .unwrap();
        let cfg = Config::load(&path).unwrap();
        assert_eq!(cfg.batch_size, 2);
        assert_eq!(cfg.epochs.align, 3);
        assert_eq!(cfg.epochs.recon, Epochs::default().recon);
        assert_eq!(cfg.ablation.arm().unwrap(), AttentionArm::SelfOnly);

        std::fs::write(&path, "batch_size = 0\n").unwrap();
        assert!(Config::load(&path).is_err());
        std::fs::write(&path, "[ablation]\nattention_arm = \"mystery\"\n").unwrap();
        assert!(Config::load(&path).is_err());
    }

    #[test]
    fn env_seed_override() {
        let mut cfg = Config { seed: 1, ..Default::default() };
        std::env::set_var("HSVF_SEED", "4242");
        cfg.apply_env();
        std::env::remove_var("HSVF_SEED");
        assert_eq!(cfg.seed, 4242);
    }
}
