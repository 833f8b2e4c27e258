//! Hierarchical semantic-visual fusion (HSVF) for visible/near-infrared
//! long-range haze removal, together with a synthetic paired-modality haze
//! corpus ("MiniVNHD") that makes every loss, attention mechanism and metric
//! verifiable end to end.

pub mod data_model;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod scene_synthesis;
pub mod semantic_alignment;
pub mod semantic_reconstruction;
pub mod visual_fusion;

pub use error::{Error, Result};
