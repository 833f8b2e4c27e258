//! Segmentation quality: mean intersection-over-union and pixel accuracy,
//! ignoring unannotated pixels.

use crate::data_model::{SemanticMask, IGNORE_LABEL, NUM_CLASSES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegScores {
    /// Mean IoU over classes present in the ground truth.
    pub miou: f64,
    pub pixel_acc: f64,
}

pub fn segmentation_metrics(pred: &SemanticMask, gt: &SemanticMask) -> Result<SegScores> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::shape("segmentation masks differ in size".to_string()));
    }
    let mut intersection = [0usize; NUM_CLASSES];
    let mut union = [0usize; NUM_CLASSES];
    let mut present = [false; NUM_CLASSES];
    let mut correct = 0usize;
    let mut valid = 0usize;
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        if g == IGNORE_LABEL {
            continue;
        }
        valid += 1;
        present[g as usize] = true;
        if p == g {
            correct += 1;
            intersection[g as usize] += 1;
            union[g as usize] += 1;
        } else {
            union[g as usize] += 1;
            if p != IGNORE_LABEL {
                union[p as usize] += 1;
            }
        }
    }
    if valid == 0 {
        return Err(Error::data("no valid pixels: every label is ignored"));
    }
    let mut iou_sum = 0.0;
    let mut classes = 0usize;
    for c in 0..NUM_CLASSES {
        if present[c] {
            classes += 1;
            if union[c] > 0 {
                iou_sum += intersection[c] as f64 / union[c] as f64;
            }
        }
    }
    Ok(SegScores {
        miou: iou_sum / classes as f64,
        pixel_acc: correct as f64 / valid as f64,
    })
}
