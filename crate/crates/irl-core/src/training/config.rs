use serde::{Deserialize, Serialize};

use crate::tensor::AdamHyperParams;

/// Per-stage training settings. The per-branch loss lives in the model
/// config; everything here is optimizer/schedule/sampling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub stage: usize,
    pub iterations: usize,
    pub batch_size: usize,
    /// LR patch edge length; the HR patch is scale times larger.
    pub patch_size: usize,
    pub adam: AdamHyperParams,
    pub seed: u64,
    /// Validate (and update the best snapshot) every this many iterations;
    /// 0 validates only at the end of the stage.
    pub val_every: usize,
    pub augment: bool,
}

impl TrainConfig {
    /// Learning rate schedule: halve once at 50% of the stage budget.
    pub fn lr_at(&self, iteration: usize) -> f32 {
        if self.iterations > 0 && iteration >= self.iterations / 2 {
            self.adam.lr * 0.5
        } else {
            self.adam.lr
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            stage: 0,
            iterations: 1000,
            batch_size: 4,
            patch_size: 12,
            adam: AdamHyperParams::default(),
            seed: 0,
            val_every: 0,
            augment: true,
        }
    }
}
