use crate::data::SrDataset;
use crate::model::{Loss, Variant};

use super::checkpoint::Checkpoint;
use super::trainer::train_stage;
use super::{TrainConfig, TrainError};

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub variant: Variant,
    pub loss: Loss,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub wall_clock_s: f64,
}

/// Trains the first residual branch once per (variant, loss) configuration,
/// always from the same master checkpoint and seed. Rows come out in the
/// order of the `variants` and `losses` slices, variants outermost.
pub fn run_ablation(
    master: &Checkpoint,
    variants: &[Variant],
    losses: &[Loss],
    stage_cfg: &TrainConfig,
    train_set: &SrDataset,
    val_set: &SrDataset,
) -> Result<Vec<AblationRow>, TrainError> {
    if stage_cfg.stage != 1 {
        return Err(TrainError::StageMismatch(format!(
            "ablation trains stage 1, got stage {}",
            stage_cfg.stage
        )));
    }
    if master.built_branches != 1 {
        return Err(TrainError::StageMismatch(
            "ablation needs a master-only checkpoint".into(),
        ));
    }
    let mut rows = Vec::with_capacity(variants.len() * losses.len());
    for &variant in variants {
        for &loss in losses {
            let mut prior = master.clone();
            for spec in prior.model_config.specs.iter_mut().skip(1) {
                spec.variant = variant;
                spec.loss = loss;
            }
            let model_cfg = prior.model_config.clone();
            let outcome =
                train_stage(stage_cfg, &model_cfg, train_set, val_set, Some(&prior))?;
            rows.push(AblationRow {
                variant,
                loss,
                mean_psnr: outcome.report.mean_psnr,
                mean_ssim: outcome.report.mean_ssim,
                wall_clock_s: outcome.wall_clock_s,
            });
        }
    }
    Ok(rows)
}
