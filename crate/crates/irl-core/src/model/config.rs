use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    L1,
    L2,
}

/// Residual branch input selection: `Up` consumes features after the
/// corresponding upsampling stage, `Down` consumes the features feeding it
/// (one extra upsampling stage inside the branch makes up the difference).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Up,
    Down,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchSpec {
    pub index: usize,
    pub n_blocks: usize,
    pub n_feats: usize,
    pub loss: Loss,
    pub variant: Variant,
    /// (branch j, stage k) pairs; branch i > 0 taps [F_0^i, F_1^{i-1}, ..., F_{i-1}^1].
    pub input_taps: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub scale: usize,
    /// Specs indexed 0..=n; index 0 is the master.
    pub specs: Vec<BranchSpec>,
    pub res_scale: f32,
}

/// Residual branch count per scale: one branch for x2 and x3, two for x4.
pub fn residual_branch_count(scale: usize) -> Result<usize, ModelError> {
    match scale {
        2 | 3 => Ok(1),
        4 => Ok(2),
        other => Err(ModelError::InvalidScale(other)),
    }
}

impl ModelConfig {
    pub fn new(
        scale: usize,
        master_blocks: usize,
        n_feats: usize,
        variant: Variant,
        master_loss: Loss,
        residual_loss: Loss,
        res_scale: f32,
    ) -> Result<ModelConfig, ModelError> {
        let n = residual_branch_count(scale)?;
        let mut specs = Vec::with_capacity(n + 1);
        specs.push(BranchSpec {
            index: 0,
            n_blocks: master_blocks,
            n_feats,
            loss: master_loss,
            variant,
            input_taps: Vec::new(),
        });
        let mut blocks = master_blocks;
        for i in 1..=n {
            blocks = (blocks / 2).max(1);
            let input_taps = (0..i).map(|j| (j, i - j)).collect();
            specs.push(BranchSpec {
                index: i,
                n_blocks: blocks,
                n_feats,
                loss: residual_loss,
                variant,
                input_taps,
            });
        }
        let cfg = ModelConfig { scale, specs, res_scale };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_residual_branches(&self) -> usize {
        self.specs.len() - 1
    }

    /// Absolute spatial scale (relative to the LR input) where branch i's
    /// input taps live in the up variant: 2^i capped at the model scale
    /// (x3 models have a single x3 stage).
    pub fn tap_scale(&self, i: usize) -> usize {
        if self.scale == 3 {
            3
        } else {
            (1usize << i).min(self.scale)
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = residual_branch_count(self.scale)?;
        if self.specs.len() != n + 1 {
            return Err(ModelError::BranchCount { got: self.specs.len() - 1, expected: n });
        }
        for (i, spec) in self.specs.iter().enumerate() {
            if spec.index != i {
                return Err(ModelError::BadSpec(format!(
                    "spec at position {i} has index {}",
                    spec.index
                )));
            }
            if i == 0 {
                if !spec.input_taps.is_empty() {
                    return Err(ModelError::BadSpec("master must have no input taps".into()));
                }
            } else {
                let expected: Vec<(usize, usize)> = (0..i).map(|j| (j, i - j)).collect();
                if spec.input_taps != expected {
                    return Err(ModelError::BadSpec(format!(
                        "branch {i} taps {:?}, expected {:?}",
                        spec.input_taps, expected
                    )));
                }
                let prev = self.specs[i - 1].n_blocks;
                if spec.n_blocks != (prev / 2).max(1) {
                    return Err(ModelError::BadSpec(format!(
                        "branch {i} has {} blocks, halving rule expects {}",
                        spec.n_blocks,
                        (prev / 2).max(1)
                    )));
                }
            }
            if spec.n_blocks == 0 || spec.n_feats == 0 {
                return Err(ModelError::BadSpec(format!("branch {i} has zero blocks or feats")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_rule_from_eight() {
        let cfg = ModelConfig::new(4, 8, 16, Variant::Up, Loss::L1, Loss::L2, 1.0).unwrap();
        let blocks: Vec<usize> = cfg.specs.iter().map(|s| s.n_blocks).collect();
        assert_eq!(blocks, vec![8, 4, 2]);
    }

    #[test]
    fn branch_count_by_scale() {
        assert_eq!(residual_branch_count(2).unwrap(), 1);
        assert_eq!(residual_branch_count(3).unwrap(), 1);
        assert_eq!(residual_branch_count(4).unwrap(), 2);
        assert!(residual_branch_count(5).is_err());
    }

    #[test]
    fn tap_pattern_follows_branch_rule() {
        let cfg = ModelConfig::new(4, 4, 8, Variant::Up, Loss::L1, Loss::L2, 1.0).unwrap();
        assert!(cfg.specs[0].input_taps.is_empty());
        assert_eq!(cfg.specs[1].input_taps, vec![(0, 1)]);
        assert_eq!(cfg.specs[2].input_taps, vec![(0, 2), (1, 1)]);
        assert_eq!(cfg.tap_scale(1), 2);
        assert_eq!(cfg.tap_scale(2), 4);

        let cfg3 = ModelConfig::new(3, 4, 8, Variant::Up, Loss::L1, Loss::L2, 1.0).unwrap();
        assert_eq!(cfg3.tap_scale(1), 3);
    }
}
