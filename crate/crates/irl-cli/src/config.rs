//! TOML experiment config. Unknown keys are rejected so typos fail loudly,
//! and every referenced path is checked before any training starts.

use std::path::{Path, PathBuf};

use irl_core::model::{Loss, ModelConfig, Variant};
use irl_core::tensor::AdamHyperParams;
use irl_core::training::TrainConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub train: TrainSection,
    pub data: DataSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub scale: usize,
    pub master_blocks: usize,
    pub n_feats: usize,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_master_loss")]
    pub master_loss: Loss,
    #[serde(default = "default_residual_loss")]
    pub residual_loss: Loss,
    #[serde(default = "default_res_scale")]
    pub res_scale: f32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    /// Residual-stage budget; defaults to a quarter of the master budget.
    pub residual_iterations: Option<usize>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_patch_size")]
    pub patch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub val_every: usize,
    #[serde(default = "default_augment")]
    pub augment: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub train_dir: PathBuf,
    pub val_dir: PathBuf,
    pub output_dir: PathBuf,
}

fn default_variant() -> Variant {
    Variant::Up
}
fn default_master_loss() -> Loss {
    Loss::L1
}
fn default_residual_loss() -> Loss {
    Loss::L2
}
fn default_res_scale() -> f32 {
    1.0
}
fn default_batch_size() -> usize {
    4
}
fn default_patch_size() -> usize {
    12
}
fn default_lr() -> f32 {
    1e-4
}
fn default_augment() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Checks dataset paths and creates the output directory.
    pub fn prepare_paths(&self) -> Result<(), CliError> {
        for (label, dir) in [("train_dir", &self.data.train_dir), ("val_dir", &self.data.val_dir)] {
            if !dir.is_dir() {
                return Err(CliError::Config(format!(
                    "{label} {} is not a directory",
                    dir.display()
                )));
            }
        }
        std::fs::create_dir_all(&self.data.output_dir).map_err(|e| {
            CliError::Data(format!(
                "cannot create output_dir {}: {e}",
                self.data.output_dir.display()
            ))
        })
    }

    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        ModelConfig::new(
            self.model.scale,
            self.model.master_blocks,
            self.model.n_feats,
            self.model.variant,
            self.model.master_loss,
            self.model.residual_loss,
            self.model.res_scale,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn train_config(&self, stage: usize, seed_override: Option<u64>) -> TrainConfig {
        let iterations = if stage == 0 {
            self.train.iterations
        } else {
            self.train.residual_iterations.unwrap_or(self.train.iterations / 4)
        };
        TrainConfig {
            stage,
            iterations,
            batch_size: self.train.batch_size,
            patch_size: self.train.patch_size,
            adam: AdamHyperParams { lr: self.train.lr, ..AdamHyperParams::default() },
            seed: seed_override.unwrap_or(self.train.seed),
            val_every: self.train.val_every,
            augment: self.train.augment,
        }
    }

    pub fn stage_checkpoint(&self, stage: usize) -> PathBuf {
        self.data.output_dir.join(format!("stage_{stage}.ckpt"))
    }
}
