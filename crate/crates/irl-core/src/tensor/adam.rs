use serde::{Deserialize, Serialize};

use super::Tensor;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamHyperParams {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamHyperParams {
    fn default() -> Self {
        AdamHyperParams { lr: 1e-4, beta1: 0.9, beta2: 0.99, eps: 1e-8 }
    }
}

/// Per-parameter Adam moments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u64,
}

impl AdamState {
    pub fn new(numel: usize) -> Self {
        AdamState { m: vec![0.0; numel], v: vec![0.0; numel], t: 0 }
    }
}

/// Bias-corrected Adam over a fixed parameter list.
pub struct Adam {
    pub hp: AdamHyperParams,
    pub states: Vec<AdamState>,
}

impl Adam {
    pub fn new(hp: AdamHyperParams, params: &[Tensor]) -> Self {
        Adam {
            hp,
            states: params.iter().map(|p| AdamState::new(p.numel())).collect(),
        }
    }

    /// One update step over all parameters; missing grads are treated as zero.
    /// `lr_override` supports schedules without mutating the hyperparameters.
    pub fn step(&mut self, params: &[Tensor], lr_override: Option<f32>) {
        assert_eq!(params.len(), self.states.len());
        let lr = lr_override.unwrap_or(self.hp.lr);
        for (param, state) in params.iter().zip(self.states.iter_mut()) {
            let grad = param.grad().clone();
            adam_step(param, grad.as_deref(), state, lr, self.hp.beta1, self.hp.beta2, self.hp.eps);
        }
    }
}

pub fn adam_step(
    param: &Tensor,
    grad: Option<&[f32]>,
    state: &mut AdamState,
    lr: f32,
    beta1: f32,
    beta2: f32,
    eps: f32,
) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let mut data = param.data_mut();
    for i in 0..data.len() {
        let g = grad.map_or(0.0, |g| g[i]);
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
