//! Incremental residual learning for single-image super-resolution.
//!
//! A master network is trained and frozen, then residual branches are
//! attached one at a time: each consumes upsampled feature taps of earlier
//! branches and is trained on the accumulated image-space residual.
//! Inference sums all branch outputs.

pub mod data;
pub mod model;
pub mod tensor;
pub mod training;
