//! Staged training: align → recon → fusion → finetune, each stage loading
//! the previous stage's checkpoint and writing its own plus a JSONL log of
//! every step's loss components.

use std::io::Write;
use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_model::{load_manifest, load_pair, Condition, ScenePair, SemanticMask};
use crate::error::{Error, Result};
use crate::metrics::segmentation_metrics;
use crate::nn::{image_to_tensor, logits_to_mask};
use crate::pipeline::{total_loss, HsvfModel, LossComponents, LossReport, LossWeights};
use crate::scene_synthesis::Modality;
use crate::semantic_alignment::{
    alignment_total_loss, content_alignment_loss, reconstruction_losses, segmentation_loss,
};
use crate::semantic_reconstruction::{
    discriminator_loss, downsample_mask, generator_region_loss, region_masks, RegionMaskSet,
    SCORE_STRIDE,
};
use crate::visual_fusion::fusion_loss;

use super::checkpoint::{load_checkpoint, save_checkpoint};
use super::config::{Ablation, Config, Stage};

/// One scene: the clear pair and its hazy counterpart.
pub struct Scene {
    pub clear: ScenePair,
    pub hazy: ScenePair,
}

pub struct Dataset {
    pub train: Vec<Scene>,
    pub val: Vec<Scene>,
}

/// Loads the corpus manifest and splits scenes deterministically: the last
/// `val_fraction` of scene indices form the validation set.
pub fn load_dataset(cfg: &Config) -> Result<Dataset> {
    let manifest = cfg.manifest_path();
    if !manifest.exists() {
        return Err(Error::MissingFile(manifest));
    }
    let entries = load_manifest(&manifest)?;
    let mut clear = Vec::new();
    let mut hazy = Vec::new();
    for entry in &entries {
        let pair = load_pair(entry, &cfg.data_dir)?;
        match pair.condition {
            Condition::Clear => clear.push(pair),
            Condition::Haze => hazy.push(pair),
        }
    }
    if clear.len() != hazy.len() || clear.is_empty() {
        return Err(Error::data(format!(
            "corpus must hold matched clear/hazy scenes, got {} clear / {} hazy",
            clear.len(),
            hazy.len()
        )));
    }
    let scenes: Vec<Scene> = clear
        .into_iter()
        .zip(hazy)
        .map(|(clear, hazy)| Scene { clear, hazy })
        .collect();
    let n = scenes.len();
    let n_val = ((n as f64 * cfg.val_fraction).ceil() as usize).clamp(1, n - 1);
    let mut train = scenes;
    let val = train.split_off(n - n_val);
    Ok(Dataset { train, val })
}

/// Hazy/clear tensors plus ground-truth masks, converted once.
struct TensorScene {
    id: String,
    vis_h: Tensor,
    nir_h: Tensor,
    vis_c: Tensor,
    gt: SemanticMask,
    gt_small: SemanticMask,
}

fn to_tensors(model: &HsvfModel, scenes: &[Scene]) -> Result<Vec<TensorScene>> {
    let dtype = model.store.dtype();
    let dev = model.store.device().clone();
    scenes
        .iter()
        .map(|s| {
            let gt = s
                .hazy
                .mask
                .clone()
                .ok_or_else(|| Error::data(format!("scene {} has no mask", s.hazy.id)))?;
            Ok(TensorScene {
                id: s.hazy.id.clone(),
                vis_h: image_to_tensor(&s.hazy.visible, dtype, &dev)?,
                nir_h: image_to_tensor(&s.hazy.nir, dtype, &dev)?,
                vis_c: image_to_tensor(&s.clear.visible, dtype, &dev)?,
                gt_small: downsample_mask(&gt, SCORE_STRIDE)?,
                gt,
            })
        })
        .collect()
}

fn zero_scalar(model: &HsvfModel) -> Result<Tensor> {
    Ok(Tensor::zeros((), model.store.dtype(), model.store.device())?)
}

/// Region masks at discriminator-score resolution; with `image_level` every
/// pixel is assigned to a single class, turning the bank into one
/// image-level discriminator.
fn score_masks(model: &HsvfModel, mask: &SemanticMask, image_level: bool) -> Result<RegionMaskSet> {
    if image_level {
        let flat = SemanticMask::new(mask.height(), mask.width(), vec![0u8; mask.height() * mask.width()])?;
        return region_masks(&flat, &model.store);
    }
    region_masks(mask, &model.store)
}

fn pred_score_masks(model: &HsvfModel, logits: &Tensor, image_level: bool) -> Result<RegionMaskSet> {
    let pred = logits_to_mask(&logits.to_dtype(DType::F64)?)?;
    let small = downsample_mask(&pred, SCORE_STRIDE)?;
    score_masks(model, &small, image_level)
}

/// The alignment objective for one hazy pair under the ablation flags.
fn align_components(model: &HsvfModel, ts: &TensorScene, abl: &Ablation) -> Result<Tensor> {
    let b_v = model.align.encode(&ts.vis_h, Modality::Vis)?;
    let l_v = model.align.decode_segmentation(&b_v.content)?;
    if abl.visible_only {
        let seg = (segmentation_loss(&l_v, &l_v, &ts.gt)? * 0.5)?;
        return Ok(seg);
    }
    let b_n = model.align.encode(&ts.nir_h, Modality::Nir)?;
    let l_n = model.align.decode_segmentation(&b_n.content)?;
    let seg = segmentation_loss(&l_v, &l_n, &ts.gt)?;
    let content = if abl.disable_content_align {
        zero_scalar(model)?
    } else {
        content_alignment_loss(&b_v.content, &b_n.content)?
    };
    let (rec_v, rec_n) = if abl.disable_cross_recon {
        (zero_scalar(model)?, zero_scalar(model)?)
    } else {
        reconstruction_losses(&model.align, &ts.vis_h, &ts.nir_h, &b_v, &b_n)?
    };
    alignment_total_loss(&content, &seg, &rec_v, &rec_n)
}

/// Segmentation prediction used downstream: dual-branch average, or the
/// visible branch alone under the visible-only ablation.
fn predict_logits(model: &HsvfModel, ts: &TensorScene, abl: &Ablation) -> Result<(Tensor, Tensor)> {
    let c_v = model.align.encode_content(&ts.vis_h, Modality::Vis)?;
    let l_v = model.align.decode_segmentation(&c_v)?;
    if abl.visible_only {
        return Ok((l_v, c_v));
    }
    let c_n = model.align.encode_content(&ts.nir_h, Modality::Nir)?;
    let l_n = model.align.decode_segmentation(&c_n)?;
    Ok((((l_v + l_n)? * 0.5)?, c_v))
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    stage: String,
    epoch: usize,
    step: usize,
    scene: String,
    #[serde(flatten)]
    losses: LossReport,
}

pub struct StageOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub steps: usize,
    pub final_total: f64,
}

fn ckpt_base(out_dir: &Path, stage: Stage) -> PathBuf {
    out_dir.join(stage.name())
}

struct StepLosses {
    components: LossComponents,
    total: Tensor,
}

/// Runs one training stage end to end.
pub fn run_stage(cfg: &Config, stage: Stage) -> Result<StageOutcome> {
    cfg.validate()?;
    let arm = cfg.ablation.arm()?;
    let mut model = HsvfModel::new(cfg.seed, DType::F64, arm)?;
    if let Some(prev) = stage.prerequisite() {
        let base = ckpt_base(&cfg.out_dir, prev);
        if !super::checkpoint::bin_path(&base).exists() {
            return Err(Error::MissingFile(super::checkpoint::bin_path(&base)));
        }
        load_checkpoint(&mut model.store, &base)?;
    }
    let data = load_dataset(cfg)?;
    let train = to_tensors(&model, &data.train)?;

    let epochs = cfg.epochs.for_stage(stage);
    let gen_vars = match stage {
        Stage::Align => model.store.vars_with_prefix("align."),
        Stage::Recon => model.store.vars_with_prefix("recon.gen"),
        Stage::Fusion => model.store.vars_with_prefix("fusion."),
        Stage::Finetune => {
            let mut v = model.store.vars_with_prefix("align.");
            v.extend(model.store.vars_with_prefix("recon.gen"));
            v.extend(model.store.vars_with_prefix("fusion."));
            v.extend(model.store.vars_with_prefix("final.gen"));
            v
        }
    };
    let disc_vars = match stage {
        Stage::Recon => model.store.vars_with_prefix("recon.disc"),
        Stage::Finetune => {
            let mut v = model.store.vars_with_prefix("recon.disc");
            v.extend(model.store.vars_with_prefix("final.disc"));
            v
        }
        _ => Vec::new(),
    };
    let adam = |vars: Vec<candle_core::Var>, lr: f64| -> Result<AdamW> {
        Ok(AdamW::new(vars, ParamsAdamW { lr, ..Default::default() })?)
    };
    let mut gen_opt = adam(gen_vars, cfg.learning_rate)?;
    let mut disc_opt =
        if disc_vars.is_empty() { None } else { Some(adam(disc_vars, cfg.learning_rate)?) };

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let log_path = cfg.out_dir.join(format!("log_{}.jsonl", stage.name()));
    let mut log =
        std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1000 + stage as u64);
    let decay_epoch = (epochs as f64 * 0.6).ceil() as usize;

    let mut step = 0usize;
    let mut last_total = f64::NAN;
    for epoch in 0..epochs {
        if epoch == decay_epoch && epoch > 0 {
            gen_opt.set_learning_rate(cfg.learning_rate * 0.5);
            if let Some(d) = disc_opt.as_mut() {
                d.set_learning_rate(cfg.learning_rate * 0.5);
            }
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            // Discriminator step first where a bank is in play.
            if matches!(stage, Stage::Recon | Stage::Finetune) {
                let mut d_total: Option<Tensor> = None;
                for &i in chunk {
                    let ts = &train[i];
                    let clear_idx = {
                        use rand::Rng;
                        rng.gen_range(0..train.len())
                    };
                    let peer = &train[clear_idx];
                    let d = disc_step_loss(&model, ts, peer, stage, &cfg.ablation)?;
                    d_total = Some(match d_total {
                        Some(t) => (t + d)?,
                        None => d,
                    });
                }
                let d_total = (d_total.unwrap() / chunk.len() as f64)?;
                disc_opt.as_mut().unwrap().backward_step(&d_total)?;
            }

            // Generator / main step.
            let mut batch: Option<StepLosses> = None;
            for &i in chunk {
                let s = gen_step_losses(&model, &train[i], stage, &cfg.ablation, &cfg.weights)?;
                batch = Some(match batch {
                    None => s,
                    Some(acc) => StepLosses {
                        components: LossComponents {
                            align: (acc.components.align + s.components.align)?,
                            region_adv: (acc.components.region_adv + s.components.region_adv)?,
                            fusion: (acc.components.fusion + s.components.fusion)?,
                            final_region_adv: (acc.components.final_region_adv
                                + s.components.final_region_adv)?,
                            final_fusion: (acc.components.final_fusion
                                + s.components.final_fusion)?,
                        },
                        total: (acc.total + s.total)?,
                    },
                });
            }
            let batch = batch.unwrap();
            let scale = 1.0 / chunk.len() as f64;
            let total = (batch.total * scale)?;
            let report = LossReport {
                align: scalar(&batch.components.align)? * scale,
                region_adv: scalar(&batch.components.region_adv)? * scale,
                fusion: scalar(&batch.components.fusion)? * scale,
                final_region_adv: scalar(&batch.components.final_region_adv)? * scale,
                final_fusion: scalar(&batch.components.final_fusion)? * scale,
                total: scalar(&total)?,
            };
            if !report.total.is_finite() {
                let dump = cfg.out_dir.join("nan_dump.json");
                let ids: Vec<&str> = chunk.iter().map(|&i| train[i].id.as_str()).collect();
                let diag = serde_json::json!({
                    "stage": stage.name(), "epoch": epoch, "step": step,
                    "scenes": ids, "losses": report,
                });
                let _ = std::fs::write(&dump, serde_json::to_string_pretty(&diag).unwrap());
                return Err(Error::numeric(format!(
                    "non-finite loss at stage {} epoch {epoch} step {step}; diagnostics in {}",
                    stage.name(),
                    dump.display()
                )));
            }
            gen_opt.backward_step(&total)?;

            let record = StepRecord {
                stage: stage.name().to_string(),
                epoch,
                step,
                scene: train[chunk[0]].id.clone(),
                losses: report.clone(),
            };
            writeln!(log, "{}", serde_json::to_string(&record).unwrap())
                .map_err(|e| Error::io(&log_path, e))?;
            last_total = report.total;
            step += 1;
        }
    }

    let base = ckpt_base(&cfg.out_dir, stage);
    save_checkpoint(&model.store, &base, stage.name(), epochs, cfg.seed)?;
    Ok(StageOutcome {
        checkpoint: base,
        log: log_path,
        steps: step,
        final_total: last_total,
    })
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar()?)
}

/// Discriminator objective for one scene (recon bank, plus the final bank
/// during fine-tuning). All generator-side tensors are detached inside
/// `discriminator_loss`.
fn disc_step_loss(
    model: &HsvfModel,
    ts: &TensorScene,
    clear_peer: &TensorScene,
    stage: Stage,
    abl: &Ablation,
) -> Result<Tensor> {
    let (logits, c_v) = predict_logits(model, ts, abl)?;
    let o_sr = model.recon_gen.forward(&ts.vis_h, &logits.detach(), &c_v.detach())?;
    let pred_masks = pred_score_masks(model, &logits, abl.image_level_disc)?;
    let clear_masks = score_masks(model, &clear_peer.gt_small, abl.image_level_disc)?;
    let mut loss = discriminator_loss(
        &model.recon_disc,
        &clear_peer.vis_c,
        &clear_masks,
        &o_sr,
        &pred_masks,
    )?;
    if stage == Stage::Finetune {
        let o_vf = model.fusion.forward(&ts.vis_h, &ts.nir_h)?;
        let o_final = model.final_gen.forward(&o_sr, &o_vf)?;
        loss = (loss
            + discriminator_loss(
                &model.final_disc,
                &clear_peer.vis_c,
                &clear_masks,
                &o_final,
                &pred_masks,
            )?)?;
    }
    Ok(loss)
}

/// Generator-side loss components for one scene in the given stage. Stages
/// before finetune exercise a single component; finetune combines all five
/// under the configured weights.
fn gen_step_losses(
    model: &HsvfModel,
    ts: &TensorScene,
    stage: Stage,
    abl: &Ablation,
    weights: &LossWeights,
) -> Result<StepLosses> {
    let zero = || zero_scalar(model);
    match stage {
        Stage::Align => {
            let align = align_components(model, ts, abl)?;
            let total = align.clone();
            Ok(StepLosses {
                components: LossComponents {
                    align,
                    region_adv: zero()?,
                    fusion: zero()?,
                    final_region_adv: zero()?,
                    final_fusion: zero()?,
                },
                total,
            })
        }
        Stage::Recon => {
            let (logits, c_v) = predict_logits(model, ts, abl)?;
            let o_sr = model.recon_gen.forward(&ts.vis_h, &logits.detach(), &c_v.detach())?;
            let pred_masks = pred_score_masks(model, &logits, abl.image_level_disc)?;
            let region_adv = generator_region_loss(&model.recon_disc, &o_sr, &pred_masks)?;
            let total = region_adv.clone();
            Ok(StepLosses {
                components: LossComponents {
                    align: zero()?,
                    region_adv,
                    fusion: zero()?,
                    final_region_adv: zero()?,
                    final_fusion: zero()?,
                },
                total,
            })
        }
        Stage::Fusion => {
            let o_vf = model.fusion.forward(&ts.vis_h, &ts.nir_h)?;
            let fusion = fusion_loss(&o_vf, &ts.vis_h, &ts.nir_h)?;
            let total = fusion.clone();
            Ok(StepLosses {
                components: LossComponents {
                    align: zero()?,
                    region_adv: zero()?,
                    fusion,
                    final_region_adv: zero()?,
                    final_fusion: zero()?,
                },
                total,
            })
        }
        Stage::Finetune => {
            let align = align_components(model, ts, abl)?;
            let (logits, c_v) = predict_logits(model, ts, abl)?;
            let o_sr = model.recon_gen.forward(&ts.vis_h, &logits, &c_v)?;
            let pred_masks = pred_score_masks(model, &logits, abl.image_level_disc)?;
            let region_adv = generator_region_loss(&model.recon_disc, &o_sr, &pred_masks)?;
            let o_vf = model.fusion.forward(&ts.vis_h, &ts.nir_h)?;
            let fusion = fusion_loss(&o_vf, &ts.vis_h, &ts.nir_h)?;
            let o_final = model.final_gen.forward(&o_sr, &o_vf)?;
            let final_region_adv =
                generator_region_loss(&model.final_disc, &o_final, &pred_masks)?;
            let final_fusion = fusion_loss(&o_final, &ts.vis_h, &ts.nir_h)?;
            let components = LossComponents {
                align,
                region_adv,
                fusion,
                final_region_adv,
                final_fusion,
            };
            let total = total_loss(&components, weights)?;
            Ok(StepLosses { components, total })
        }
    }
}

/// Validation mIoU of the segmentation branch under the ablation flags.
pub fn validation_miou(model: &HsvfModel, scenes: &[Scene], abl: &Ablation) -> Result<f64> {
    let tensors = to_tensors(model, scenes)?;
    let mut sum = 0.0;
    for ts in &tensors {
        let (logits, _) = predict_logits(model, ts, abl)?;
        let pred = logits_to_mask(&logits.to_dtype(DType::F64)?)?;
        sum += segmentation_metrics(&pred, &ts.gt)?.miou;
    }
    Ok(sum / tensors.len() as f64)
}

/// Rebuilds a model from the checkpoint of the given stage.
pub fn load_stage_model(cfg: &Config, stage: Stage) -> Result<HsvfModel> {
    let arm = cfg.ablation.arm()?;
    let mut model = HsvfModel::new(cfg.seed, DType::F64, arm)?;
    let base = ckpt_base(&cfg.out_dir, stage);
    if !super::checkpoint::bin_path(&base).exists() {
        return Err(Error::MissingFile(super::checkpoint::bin_path(&base)));
    }
    load_checkpoint(&mut model.store, &base)?;
    Ok(model)
}
