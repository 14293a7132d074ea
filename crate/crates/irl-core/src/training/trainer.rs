use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::SrDataset;
use crate::model::{residual_label, Loss, Model, ModelConfig, Variant};
use crate::tensor::{self, Adam, Shape, Tape, Tensor};

use super::checkpoint::{Checkpoint, StageMetrics, TrainStateMeta};
use super::validate::{validate, EvalReport};
use super::{TrainConfig, TrainError};

/// LR-pixel tile edge used when validating full images.
pub const DEFAULT_TILE_SIZE: usize = 64;

pub struct StageOutcome {
    pub checkpoint: Checkpoint,
    pub report: EvalReport,
    pub losses: Vec<f32>,
    pub wall_clock_s: f64,
}

pub(crate) fn stage_config_label(cfg: &ModelConfig, stage: usize) -> String {
    if stage == 0 {
        format!("master_x{}", cfg.scale)
    } else {
        let spec = &cfg.specs[stage];
        let v = match spec.variant {
            Variant::Up => "up",
            Variant::Down => "down",
        };
        let l = match spec.loss {
            Loss::L1 => "l1",
            Loss::L2 => "l2",
        };
        format!("plus{stage}_{v}_{l}_x{}", cfg.scale)
    }
}

fn batch_tensors(
    ds: &SrDataset,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Tensor, Tensor), TrainError> {
    let s = ds.scale;
    let p = cfg.patch_size;
    let b = cfg.batch_size;
    let mut lr_data = Vec::with_capacity(b * 3 * p * p);
    let mut hr_data = Vec::with_capacity(b * 3 * s * p * s * p);
    for _ in 0..b {
        let img = rng.gen_range(0..ds.len());
        let seed = rng.gen::<u64>();
        let pair = ds.sample(img, p, 1, seed, cfg.augment)?.remove(0);
        lr_data.extend(pair.lr_patch.data.iter().map(|&v| v / 255.0));
        hr_data.extend(pair.hr_patch.data.iter().map(|&v| v / 255.0));
    }
    let lr = Tensor::from_vec(Shape::new(b, 3, p, p), lr_data).map_err(crate::model::ModelError::Tensor)?;
    let hr = Tensor::from_vec(Shape::new(b, 3, s * p, s * p), hr_data)
        .map_err(crate::model::ModelError::Tensor)?;
    Ok((lr, hr))
}

/// Trains one stage. Stage 0 builds and trains the master; stage i >= 1
/// reloads the prior checkpoint, freezes everything built, attaches branch i
/// and trains it on the accumulated residual with its configured loss.
/// The best-validation-PSNR parameter snapshot within the stage is kept.
pub fn train_stage(
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    train_set: &SrDataset,
    val_set: &SrDataset,
    prior: Option<&Checkpoint>,
) -> Result<StageOutcome, TrainError> {
    let stage = cfg.stage;
    model_cfg.validate()?;
    if stage > model_cfg.n_residual_branches() {
        return Err(TrainError::StageMismatch(format!(
            "stage {stage} exceeds configured branch count {}",
            model_cfg.n_residual_branches()
        )));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(stage as u64 * 0x9E37_79B9));

    let (model, mut history) = if stage == 0 {
        (Model::new_master(model_cfg.clone(), &mut rng)?, Vec::new())
    } else {
        let prior = prior.ok_or(TrainError::MissingPrior(stage))?;
        if prior.built_branches != stage {
            return Err(TrainError::StageMismatch(format!(
                "stage {stage} needs a prior with {stage} built branches, found {}",
                prior.built_branches
            )));
        }
        let prior_json = serde_json::to_string(&prior.model_config)
            .map_err(|e| TrainError::MalformedHeader(e.to_string()))?;
        let cfg_json = serde_json::to_string(model_cfg)
            .map_err(|e| TrainError::MalformedHeader(e.to_string()))?;
        if prior_json != cfg_json {
            return Err(TrainError::StageMismatch(
                "model config differs from prior checkpoint".into(),
            ));
        }
        let mut model = prior.to_model()?;
        model.freeze_built();
        model.attach_branch(stage, &mut rng)?;
        (model, prior.metrics_history.clone())
    };

    let trainable: Vec<(String, Tensor)> = model.branches[stage]
        .params()
        .into_iter()
        .map(|(n, t)| (format!("branch{stage}.{n}"), t))
        .collect();
    let param_tensors: Vec<Tensor> = trainable.iter().map(|(_, t)| t.clone()).collect();
    let mut adam = Adam::new(cfg.adam, &param_tensors);

    let loss_kind = model_cfg.specs[stage].loss;
    let mut losses = Vec::with_capacity(cfg.iterations);
    let mut best: Option<Snapshot> = None;

    for it in 0..cfg.iterations {
        let (lr_batch, hr_batch) = batch_tensors(train_set, cfg, &mut rng)?;
        let tape = Tape::new();
        let out = model.forward(&tape, &lr_batch)?;
        let label = residual_label(&hr_batch, &out.preds, stage)?;
        let loss = match loss_kind {
            Loss::L1 => tensor::l1_loss(&tape, &out.preds[stage], &label),
            Loss::L2 => tensor::l2_loss(&tape, &out.preds[stage], &label),
        }
        .map_err(crate::model::ModelError::Tensor)?;
        let loss_val = loss.item();
        if !loss_val.is_finite() {
            return Err(TrainError::NonFiniteLoss(it));
        }
        losses.push(loss_val);
        tensor::backward(&tape, &loss).map_err(crate::model::ModelError::Tensor)?;
        adam.step(&param_tensors, Some(cfg.lr_at(it)));
        for t in &param_tensors {
            t.clear_grad();
        }

        if cfg.val_every > 0 && (it + 1) % cfg.val_every == 0 && it + 1 < cfg.iterations {
            let report = validate(&model, val_set, DEFAULT_TILE_SIZE)?;
            maybe_snapshot(&mut best, report, &param_tensors, &adam);
        }
    }

    let report = validate(&model, val_set, DEFAULT_TILE_SIZE)?;
    maybe_snapshot(&mut best, report, &param_tensors, &adam);
    let (best_report, best_params, best_states) = best.expect("at least the final validation");
    for (t, data) in param_tensors.iter().zip(&best_params) {
        t.data_mut().copy_from_slice(data);
    }
    adam.states = best_states;

    let wall_clock_s = start.elapsed().as_secs_f64();
    history.push(StageMetrics {
        stage,
        config: stage_config_label(model_cfg, stage),
        mean_psnr: best_report.mean_psnr,
        mean_ssim: best_report.mean_ssim,
        wall_clock_s,
    });

    let names: Vec<String> = trainable.iter().map(|(n, _)| n.clone()).collect();
    let train_state = TrainStateMeta {
        stage,
        step: cfg.iterations as u64,
        best_psnr: best_report.mean_psnr,
        seed: cfg.seed,
        adam_t: adam.states.iter().map(|s| s.t).collect(),
    };
    let checkpoint = Checkpoint::from_model(
        &model,
        train_state,
        history,
        Some((&names, &adam.states)),
    );
    Ok(StageOutcome { checkpoint, report: best_report, losses, wall_clock_s })
}

/// Best validation so far: report, parameter buffers, optimizer moments.
type Snapshot = (EvalReport, Vec<Vec<f32>>, Vec<tensor::AdamState>);

fn maybe_snapshot(best: &mut Option<Snapshot>, report: EvalReport, params: &[Tensor], adam: &Adam) {
    let better = best.as_ref().is_none_or(|(r, _, _)| report.mean_psnr > r.mean_psnr);
    if better {
        let data = params.iter().map(|t| t.data().clone()).collect();
        *best = Some((report, data, adam.states.clone()));
    }
}
