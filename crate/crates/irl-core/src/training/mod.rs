//! Sequential stage orchestration: train the master, freeze it, then train
//! each residual branch on its accumulated residual labels. Also owns
//! checkpointing, validation and the variant/loss ablation harness.

mod ablation;
mod checkpoint;
mod config;
mod infer;
mod trainer;
mod validate;

pub use ablation::{run_ablation, AblationRow};
pub use checkpoint::{
    load_checkpoint, params_equal, save_checkpoint, Checkpoint, StageMetrics, TrainStateMeta,
};
pub use config::TrainConfig;
pub use infer::{sr_forward, sr_forward_levels, DEFAULT_TILE_CONTEXT};
pub use trainer::{train_stage, StageOutcome, DEFAULT_TILE_SIZE};
pub use validate::{validate, write_metrics_csv, EvalReport, EvalRow, MetricsRecord};

use crate::data::DataError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("stage {0} requires a prior checkpoint with {0} trained branches")]
    MissingPrior(usize),
    #[error("stage/config mismatch: {0}")]
    StageMismatch(String),
    #[error("non-finite loss at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("checkpoint has foreign magic bytes")]
    CorruptMagic,
    #[error("checkpoint format version {got}, expected {expected}")]
    VersionMismatch { got: u32, expected: u32 },
    #[error("checkpoint payload truncated: tensor {name} needs {need} bytes, {have} available")]
    TruncatedPayload { name: String, need: usize, have: usize },
    #[error("malformed checkpoint header: {0}")]
    MalformedHeader(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}
