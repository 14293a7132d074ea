use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Model, ModelConfig};
use crate::tensor::{AdamState, Shape};

use super::TrainError;

pub const MAGIC: &[u8; 7] = b"IRLSR1\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainStateMeta {
    pub stage: usize,
    pub step: u64,
    pub best_psnr: f64,
    pub seed: u64,
    /// Adam step counters, aligned with the `optim.m.*` tensor order.
    pub adam_t: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageMetrics {
    pub stage: usize,
    pub config: String,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub wall_clock_s: f64,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: [usize; 4],
    offset: u64,
    len: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    model: ModelConfig,
    built_branches: usize,
    frozen: Vec<bool>,
    train_state: TrainStateMeta,
    metrics_history: Vec<StageMetrics>,
    tensors: Vec<TensorEntry>,
}

/// In-memory checkpoint: model config plus every tensor needed to resume
/// (parameters and Adam moments of the most recent stage).
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub built_branches: usize,
    pub frozen: Vec<bool>,
    pub train_state: TrainStateMeta,
    pub metrics_history: Vec<StageMetrics>,
    pub tensors: Vec<(String, Shape, Vec<f32>)>,
}

impl Checkpoint {
    /// Captures a model plus optional optimizer moments for its last branch.
    pub fn from_model(
        model: &Model,
        train_state: TrainStateMeta,
        metrics_history: Vec<StageMetrics>,
        adam: Option<(&[String], &[AdamState])>,
    ) -> Checkpoint {
        let mut tensors: Vec<(String, Shape, Vec<f32>)> = model
            .params()
            .into_iter()
            .map(|(name, t)| (name, t.shape(), t.data().clone()))
            .collect();
        if let Some((names, states)) = adam {
            for (name, st) in names.iter().zip(states) {
                let shape = Shape::new(1, 1, 1, st.m.len());
                tensors.push((format!("optim.m.{name}"), shape, st.m.clone()));
                tensors.push((format!("optim.v.{name}"), shape, st.v.clone()));
            }
        }
        Checkpoint {
            model_config: model.config.clone(),
            built_branches: model.branches.len(),
            frozen: model.branches.iter().map(|b| b.frozen()).collect(),
            train_state,
            metrics_history,
            tensors,
        }
    }

    /// Rebuilds the model: construct branches from the config, then overwrite
    /// every parameter from the stored tensors and restore frozen flags.
    pub fn to_model(&self) -> Result<Model, TrainError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Model::new_master(self.model_config.clone(), &mut rng)?;
        for i in 1..self.built_branches {
            model.attach_branch(i, &mut rng)?;
        }
        for (name, param) in model.params() {
            let stored = self
                .tensors
                .iter()
                .find(|(n, _, _)| *n == name)
                .ok_or_else(|| TrainError::MalformedHeader(format!("missing tensor {name}")))?;
            if stored.1 != param.shape() {
                return Err(TrainError::MalformedHeader(format!(
                    "tensor {name} has shape {} in checkpoint, model expects {}",
                    stored.1,
                    param.shape()
                )));
            }
            param.data_mut().copy_from_slice(&stored.2);
        }
        for (i, frozen) in self.frozen.iter().enumerate() {
            if *frozen {
                model.branches[i].freeze();
            }
        }
        Ok(model)
    }

    /// Restores Adam moments for the given parameter names, if present.
    pub fn adam_states(&self, names: &[String]) -> Option<Vec<AdamState>> {
        let mut out = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let m = &self.tensors.iter().find(|(n, _, _)| *n == format!("optim.m.{name}"))?.2;
            let v = &self.tensors.iter().find(|(n, _, _)| *n == format!("optim.v.{name}"))?.2;
            let t = *self.train_state.adam_t.get(i)?;
            out.push(AdamState { m: m.clone(), v: v.clone(), t });
        }
        Some(out)
    }

    pub fn find_tensor(&self, name: &str) -> Option<&(String, Shape, Vec<f32>)> {
        self.tensors.iter().find(|(n, _, _)| n == name)
    }
}

/// File layout: 7 magic bytes, u64 LE header length, UTF-8 JSON header
/// (config + tensor directory with name/shape/offset), then little-endian
/// f32 tensor payloads in directory order.
pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), TrainError> {
    let mut entries = Vec::with_capacity(ckpt.tensors.len());
    let mut offset = 0u64;
    for (name, shape, data) in &ckpt.tensors {
        entries.push(TensorEntry {
            name: name.clone(),
            shape: [shape.n, shape.c, shape.h, shape.w],
            offset,
            len: data.len() as u64,
        });
        offset += 4 * data.len() as u64;
    }
    let header = Header {
        version: FORMAT_VERSION,
        model: ckpt.model_config.clone(),
        built_branches: ckpt.built_branches,
        frozen: ckpt.frozen.clone(),
        train_state: ckpt.train_state.clone(),
        metrics_history: ckpt.metrics_history.clone(),
        tensors: entries,
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| TrainError::MalformedHeader(e.to_string()))?;

    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(header_json.len() as u64).to_le_bytes())?;
    w.write_all(&header_json)?;
    for (_, _, data) in &ckpt.tensors {
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, TrainError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 7];
    file.read_exact(&mut magic).map_err(|_| TrainError::CorruptMagic)?;
    if &magic != MAGIC {
        return Err(TrainError::CorruptMagic);
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)
        .map_err(|_| TrainError::MalformedHeader("missing header length".into()))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    file.read_exact(&mut header_json)
        .map_err(|_| TrainError::MalformedHeader("header shorter than declared".into()))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| TrainError::MalformedHeader(e.to_string()))?;
    if header.version != FORMAT_VERSION {
        return Err(TrainError::VersionMismatch {
            got: header.version,
            expected: FORMAT_VERSION,
        });
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in &header.tensors {
        let start = entry.offset as usize;
        let nbytes = entry.len as usize * 4;
        if start + nbytes > payload.len() {
            return Err(TrainError::TruncatedPayload {
                name: entry.name.clone(),
                need: nbytes,
                have: payload.len().saturating_sub(start),
            });
        }
        let data: Vec<f32> = payload[start..start + nbytes]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let [n, c, h, w] = entry.shape;
        let shape = Shape::new(n, c, h, w);
        if shape.numel() != data.len() {
            return Err(TrainError::MalformedHeader(format!(
                "tensor {} shape/len disagreement",
                entry.name
            )));
        }
        tensors.push((entry.name.clone(), shape, data));
    }
    Ok(Checkpoint {
        model_config: header.model,
        built_branches: header.built_branches,
        frozen: header.frozen,
        train_state: header.train_state,
        metrics_history: header.metrics_history,
        tensors,
    })
}

/// Bit-exact equality check used by round-trip tests.
pub fn params_equal(a: &Model, b: &Model) -> bool {
    let (pa, pb) = (a.params(), b.params());
    pa.len() == pb.len()
        && pa.iter().zip(&pb).all(|((na, ta), (nb, tb))| {
            na == nb
                && ta.shape() == tb.shape()
                && ta.data().iter().zip(tb.data().iter()).all(|(x, y)| x.to_bits() == y.to_bits())
        })
}
