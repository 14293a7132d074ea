use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::tensor::{self, Shape, Tape, Tensor};

use super::config::{BranchSpec, ModelConfig, Variant};
use super::ModelError;

pub(crate) struct Conv {
    pub weight: Tensor,
    pub bias: Tensor,
    pub padding: usize,
}

impl Conv {
    fn new(co: usize, ci: usize, k: usize, padding: usize, rng: &mut impl Rng) -> Conv {
        let fan_in = (ci * k * k) as f32;
        let normal = Normal::new(0.0f32, (2.0 / fan_in).sqrt()).unwrap();
        let data: Vec<f32> = (0..co * ci * k * k).map(|_| normal.sample(rng)).collect();
        Conv {
            weight: Tensor::param(Shape::new(co, ci, k, k), data).unwrap(),
            bias: Tensor::param(Shape::new(1, co, 1, 1), vec![0.0; co]).unwrap(),
            padding,
        }
    }

    fn zeroed(co: usize, ci: usize, k: usize, padding: usize) -> Conv {
        Conv {
            weight: Tensor::param(Shape::new(co, ci, k, k), vec![0.0; co * ci * k * k]).unwrap(),
            bias: Tensor::param(Shape::new(1, co, 1, 1), vec![0.0; co]).unwrap(),
            padding,
        }
    }

    fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(tensor::conv2d(tape, x, &self.weight, &self.bias, self.padding)?)
    }
}

pub(crate) struct ResBlock {
    conv1: Conv,
    conv2: Conv,
    res_scale: f32,
}

impl ResBlock {
    fn forward(&self, tape: &Tape, x: &Tensor) -> Result<Tensor, ModelError> {
        let y = self.conv1.forward(tape, x)?;
        let y = tensor::relu(tape, &y);
        let y = self.conv2.forward(tape, &y)?;
        let y = tensor::scale(tape, &y, self.res_scale);
        Ok(tensor::add(tape, x, &y)?)
    }
}

/// One upsampling stage: conv to r^2 * feats channels, then pixel shuffle.
pub(crate) struct UpStage {
    conv: Conv,
    r: usize,
}

/// Output of one branch forward pass: the image-space prediction plus the
/// feature taps later branches may consume, keyed by absolute scale.
pub struct BranchOutput {
    pub pred: Tensor,
    /// Features after each upsampling stage, keyed by the scale they reach.
    pub post_taps: Vec<(usize, Tensor)>,
    /// Features entering each upsampling stage, keyed by the scale the stage reaches.
    pub pre_taps: Vec<(usize, Tensor)>,
}

impl BranchOutput {
    pub fn post_tap(&self, scale: usize) -> Option<&Tensor> {
        self.post_taps.iter().find(|(s, _)| *s == scale).map(|(_, t)| t)
    }

    pub fn pre_tap(&self, scale: usize) -> Option<&Tensor> {
        self.pre_taps.iter().find(|(s, _)| *s == scale).map(|(_, t)| t)
    }
}

pub struct Branch {
    pub index: usize,
    pub in_channels: usize,
    /// Absolute scale of this branch's input relative to the LR image.
    pub input_scale: usize,
    head: Conv,
    blocks: Vec<ResBlock>,
    stages: Vec<UpStage>,
    tail: Conv,
    body_skip: bool,
    frozen: bool,
}

/// Upsampling factors needed to go from `from` to `to`. An x3 model uses a
/// single x3 stage; everything else is a chain of x2 stages.
fn stage_factors(from: usize, to: usize, model_scale: usize) -> Vec<usize> {
    if from == to {
        return Vec::new();
    }
    if model_scale == 3 {
        return vec![3];
    }
    let mut factors = Vec::new();
    let mut cur = from;
    while cur < to {
        factors.push(2);
        cur *= 2;
    }
    factors
}

#[allow(clippy::too_many_arguments)]
fn build(
    spec: &BranchSpec,
    in_channels: usize,
    input_scale: usize,
    model_scale: usize,
    res_scale: f32,
    body_skip: bool,
    zero_tail: bool,
    rng: &mut impl Rng,
) -> Branch {
    let f = spec.n_feats;
    let head = Conv::new(f, in_channels, 3, 1, rng);
    let blocks = (0..spec.n_blocks)
        .map(|_| ResBlock {
            conv1: Conv::new(f, f, 3, 1, rng),
            conv2: Conv::new(f, f, 3, 1, rng),
            res_scale,
        })
        .collect();
    let stages = stage_factors(input_scale, model_scale, model_scale)
        .into_iter()
        .map(|r| UpStage { conv: Conv::new(f * r * r, f, 3, 1, rng), r })
        .collect();
    let tail = if zero_tail { Conv::zeroed(3, f, 3, 1) } else { Conv::new(3, f, 3, 1, rng) };
    Branch {
        index: spec.index,
        in_channels,
        input_scale,
        head,
        blocks,
        stages,
        tail,
        body_skip,
        frozen: false,
    }
}

/// EDSR-baseline-shaped master: head conv, residual blocks with a body skip,
/// upsampling tail, output conv. Taps are registered around every
/// upsampling stage.
pub fn build_master(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<Branch, ModelError> {
    cfg.validate()?;
    Ok(build(&cfg.specs[0], 3, 1, cfg.scale, cfg.res_scale, true, false, rng))
}

/// Residual branch i. Its input is the channel-concat of the predecessor
/// taps; the output conv starts zeroed so a fresh branch contributes nothing.
pub fn build_residual_branch(
    cfg: &ModelConfig,
    i: usize,
    rng: &mut impl Rng,
) -> Result<Branch, ModelError> {
    cfg.validate()?;
    if i == 0 || i >= cfg.specs.len() {
        return Err(ModelError::BadSpec(format!("residual branch index {i} out of range")));
    }
    let spec = &cfg.specs[i];
    let tap_scale = cfg.tap_scale(i);
    let input_scale = match spec.variant {
        Variant::Up => tap_scale,
        Variant::Down => {
            let f = if cfg.scale == 3 { 3 } else { 2 };
            tap_scale / f
        }
    };
    let in_channels: usize = spec.input_taps.iter().map(|&(j, _)| cfg.specs[j].n_feats).sum();
    Ok(build(spec, in_channels, input_scale, cfg.scale, cfg.res_scale, false, true, rng))
}

impl Branch {
    pub fn forward(&self, tape: &Tape, input: &Tensor) -> Result<BranchOutput, ModelError> {
        if input.shape().c != self.in_channels {
            return Err(ModelError::Tensor(crate::tensor::TensorError::ChannelMismatch {
                input: input.shape().c,
                expected: self.in_channels,
            }));
        }
        let head_out = self.head.forward(tape, input)?;
        let mut x = head_out.clone();
        for block in &self.blocks {
            x = block.forward(tape, &x)?;
        }
        if self.body_skip {
            x = tensor::add(tape, &x, &head_out)?;
        }
        let mut post_taps = Vec::new();
        let mut pre_taps = Vec::new();
        let mut cur_scale = self.input_scale;
        for stage in &self.stages {
            let reach = cur_scale * stage.r;
            pre_taps.push((reach, x.clone()));
            let up = stage.conv.forward(tape, &x)?;
            x = tensor::pixel_shuffle(tape, &up, stage.r)?;
            post_taps.push((reach, x.clone()));
            cur_scale = reach;
        }
        let pred = self.tail.forward(tape, &x)?;
        Ok(BranchOutput { pred, post_taps, pre_taps })
    }

    /// Named parameters in a stable order.
    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        let mut push = |name: String, c: &Conv| {
            out.push((format!("{name}.weight"), c.weight.clone()));
            out.push((format!("{name}.bias"), c.bias.clone()));
        };
        push("head".into(), &self.head);
        for (bi, block) in self.blocks.iter().enumerate() {
            push(format!("block{bi}.conv1"), &block.conv1);
            push(format!("block{bi}.conv2"), &block.conv2);
        }
        for (si, stage) in self.stages.iter().enumerate() {
            push(format!("stage{si}.conv"), &stage.conv);
        }
        push("tail".into(), &self.tail);
        out
    }

    pub fn frozen(&self) -> bool {
        self.frozen
    }

    /// Marks all parameters non-trainable. Idempotent.
    pub fn freeze(&mut self) {
        self.frozen = true;
        for (_, p) in self.params() {
            p.set_requires_grad(false);
        }
    }

    /// Number of upsampling stages (tap stages) this branch exposes.
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// SHA-256 over all parameter buffers, little-endian f32, in param order.
    pub fn params_sha256(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for (name, p) in self.params() {
            hasher.update(name.as_bytes());
            for v in p.data().iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher.finalize().into()
    }
}
