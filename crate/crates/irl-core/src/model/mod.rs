//! Incremental residual model: a master network plus sequentially attached
//! residual branches that consume upsampled feature taps of their
//! predecessors and model accumulated image-space residuals.

mod branch;
mod config;
mod stack;

pub use branch::{build_master, build_residual_branch, Branch, BranchOutput};
pub use config::{residual_branch_count, BranchSpec, Loss, ModelConfig, Variant};
pub use stack::{compose, residual_label, Model, StackOutput};

use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid scale {0}, expected 2, 3 or 4")]
    InvalidScale(usize),
    #[error("branch {branch} missing predecessor tap at scale {scale}")]
    MissingTap { branch: usize, scale: usize },
    #[error("{got} residual branches configured, scale rule expects {expected}")]
    BranchCount { got: usize, expected: usize },
    #[error("invalid spec: {0}")]
    BadSpec(String),
    #[error("empty prediction list")]
    EmptyPreds,
    #[error(transparent)]
    Tensor(TensorError),
}
