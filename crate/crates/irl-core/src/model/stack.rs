use rand::Rng;

use crate::tensor::{self, Tape, Tensor, TensorError};

use super::branch::{build_master, build_residual_branch, Branch, BranchOutput};
use super::config::{ModelConfig, Variant};
use super::ModelError;

/// Master branch plus however many residual branches have been attached.
pub struct Model {
    pub config: ModelConfig,
    pub branches: Vec<Branch>,
}

pub struct StackOutput {
    /// P_i per built branch, all at (n, 3, h*s, w*s).
    pub preds: Vec<Tensor>,
    pub branch_outputs: Vec<BranchOutput>,
}

impl Model {
    /// Builds the master branch only; residual branches are attached per
    /// training stage.
    pub fn new_master(config: ModelConfig, rng: &mut impl Rng) -> Result<Model, ModelError> {
        let master = build_master(&config, rng)?;
        Ok(Model { config, branches: vec![master] })
    }

    /// Attaches residual branch i; branches 0..i must already be built.
    pub fn attach_branch(&mut self, i: usize, rng: &mut impl Rng) -> Result<(), ModelError> {
        if i != self.branches.len() {
            return Err(ModelError::BadSpec(format!(
                "cannot attach branch {i}: {} branches built",
                self.branches.len()
            )));
        }
        let branch = build_residual_branch(&self.config, i, rng)?;
        self.branches.push(branch);
        Ok(())
    }

    /// Runs every built branch, wiring each residual branch's input from the
    /// concatenated taps of its predecessors.
    pub fn forward(&self, tape: &Tape, lr_input: &Tensor) -> Result<StackOutput, ModelError> {
        let mut outputs: Vec<BranchOutput> = Vec::with_capacity(self.branches.len());
        for (i, branch) in self.branches.iter().enumerate() {
            let out = if i == 0 {
                branch.forward(tape, lr_input)?
            } else {
                let spec = &self.config.specs[i];
                let key = self.config.tap_scale(i);
                let mut taps = Vec::with_capacity(spec.input_taps.len());
                for &(j, _) in &spec.input_taps {
                    let tap = match spec.variant {
                        Variant::Up => outputs[j].post_tap(key),
                        Variant::Down => outputs[j].pre_tap(key),
                    };
                    taps.push(tap.ok_or(ModelError::MissingTap { branch: i, scale: key })?.clone());
                }
                let input = tensor::concat_channels(tape, &taps)?;
                branch.forward(tape, &input)?
            };
            outputs.push(out);
        }
        let preds = outputs.iter().map(|o| o.pred.clone()).collect();
        Ok(StackOutput { preds, branch_outputs: outputs })
    }

    pub fn freeze_built(&mut self) {
        for b in &mut self.branches {
            b.freeze();
        }
    }

    /// Named parameters of all branches, prefixed `branch{i}.`.
    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for b in &self.branches {
            for (name, t) in b.params() {
                out.push((format!("branch{}.{name}", b.index), t));
            }
        }
        out
    }
}

/// Training label for branch i: I^HR for the master, accumulated residual
/// I^HR - sum_{k<i} P_k otherwise. Detached: no gradient flows into preds.
pub fn residual_label(hr: &Tensor, preds: &[Tensor], i: usize) -> Result<Tensor, ModelError> {
    if preds.len() < i {
        return Err(ModelError::BadSpec(format!(
            "residual label {i} needs {i} predictions, got {}",
            preds.len()
        )));
    }
    let mut label = hr.data().clone();
    for p in &preds[..i] {
        if p.shape() != hr.shape() {
            return Err(ModelError::Tensor(TensorError::ShapeMismatch(hr.shape(), p.shape())));
        }
        let pd = p.data();
        for (l, v) in label.iter_mut().zip(pd.iter()) {
            *l -= v;
        }
    }
    Ok(Tensor::from_vec(hr.shape(), label)?)
}

/// Inference composition: elementwise sum of all branch predictions.
pub fn compose(tape: &Tape, preds: &[Tensor]) -> Result<Tensor, ModelError> {
    let mut iter = preds.iter();
    let first = iter.next().ok_or(ModelError::EmptyPreds)?;
    let mut acc = first.clone();
    for p in iter {
        acc = tensor::add(tape, &acc, p)?;
    }
    Ok(acc)
}

impl From<TensorError> for ModelError {
    fn from(e: TensorError) -> Self {
        ModelError::Tensor(e)
    }
}
