//! Training/evaluation harness: configuration, checkpoints, the gradient
//! checker, the staged training loop, evaluation, and plot output.

pub mod checkpoint;
pub mod config;
pub mod evaluate;
pub mod gradcheck;
pub mod plots;
pub mod train;

pub use config::{Ablation, Config, Epochs, Stage};
pub use gradcheck::grad_check;
pub use train::{load_dataset, load_stage_model, run_stage, validation_miou, Dataset, Scene};
