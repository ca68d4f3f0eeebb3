use std::path::Path;

use c2s_core::model::{C2sCheckpoint, C2sParameters, ModelConfig, TrainingMeta};
use c2s_core::ndiff::Tensor;
use c2s_core::sounding::NormStats;
use c2s_core::train::SplitConfig;
use serde::{Deserialize, Serialize};

use super::{frame, read_bytes, unframe, write_bytes};
use crate::error::{LabError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"C2SCKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A checkpoint plus the data context it was trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCheckpoint {
    pub checkpoint: C2sCheckpoint,
    /// Delay resolution of the training data.
    pub delay_step_s: f64,
    pub split: SplitConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: u32,
    config: ModelConfig,
    norm: NormStats,
    meta: TrainingMeta,
    delay_step_s: f64,
    split: SplitConfig,
    tensors: Vec<TensorHeader>,
}

pub fn encode_checkpoint(c: &StoredCheckpoint) -> Vec<u8> {
    let p = &c.checkpoint.params;
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        config: p.config,
        norm: c.checkpoint.norm,
        meta: c.checkpoint.meta,
        delay_step_s: c.delay_step_s,
        split: c.split,
        tensors: p
            .names()
            .iter()
            .zip(p.tensors())
            .map(|(n, t)| TensorHeader {
                name: n.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let payload: Vec<f32> = p.tensors().iter().flat_map(|t| t.data().iter().copied()).collect();
    frame(CHECKPOINT_MAGIC, &header, &payload)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<StoredCheckpoint> {
    let (h, payload) = unframe::<CheckpointHeader>(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, |h| {
        h.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum()
    })?;
    let mut names = Vec::with_capacity(h.tensors.len());
    let mut tensors = Vec::with_capacity(h.tensors.len());
    let mut at = 0;
    for t in h.tensors {
        let n: usize = t.shape.iter().product();
        tensors.push(Tensor::new(&t.shape, payload[at..at + n].to_vec()).map_err(LabError::from)?);
        names.push(t.name);
        at += n;
    }
    let params = C2sParameters::from_tensors(h.config, names, tensors)?;
    Ok(StoredCheckpoint {
        checkpoint: C2sCheckpoint::new(params, h.norm, h.meta)?,
        delay_step_s: h.delay_step_s,
        split: h.split,
    })
}

pub fn write_checkpoint(c: &StoredCheckpoint, path: &Path) -> Result<()> {
    write_bytes(path, &encode_checkpoint(c))
}

pub fn read_checkpoint(path: &Path) -> Result<StoredCheckpoint> {
    decode_checkpoint(&read_bytes(path)?)
}
