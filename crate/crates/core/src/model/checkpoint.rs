use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, Precision};
use super::forward::{decode_batch, encode_batch};
use super::params::C2sParameters;
use crate::error::{Error, Result};
use crate::ndiff::Tensor;
use crate::real::Real;
use crate::sounding::{CsiSample, DelayPowerSpectrum, NormStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Encoder and decoder trained on the joint loss.
    #[serde(rename = "c2s-ae")]
    C2sAe,
    /// Decoder trained alone on true CSI.
    #[serde(rename = "baseline")]
    Baseline,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::C2sAe => "c2s-ae",
            ModelKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "c2s-ae" | "ae" => Some(ModelKind::C2sAe),
            "baseline" | "c2s" => Some(ModelKind::Baseline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub kind: ModelKind,
    pub steps: usize,
    pub best_step: usize,
    pub final_loss: f64,
    pub best_val_mse: f64,
    pub seed: u64,
    /// Hash of the batch schedule and optimizer settings.
    pub fingerprint: u64,
}

/// Trained parameters (stored as `f32`) with the statistics they expect.
#[derive(Debug, Clone, PartialEq)]
pub struct C2sCheckpoint {
    pub params: C2sParameters<f32>,
    pub norm: NormStats,
    pub meta: TrainingMeta,
}

impl C2sCheckpoint {
    pub fn new(params: C2sParameters<f32>, norm: NormStats, meta: TrainingMeta) -> Result<Self> {
        norm.validate()?;
        Ok(Self { params, norm, meta })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }

    /// Runs the decoder on normalized CSI rows (`[n·seq_len, csi_dim]`) and
    /// returns normalized DPS rows as `f64`.
    pub fn decode_normalized(&self, csi: &[f64], seq_len: usize) -> Result<Vec<f64>> {
        match self.config().precision {
            Precision::F32 => run::<f32>(&self.params, csi, seq_len),
            Precision::F64 => run::<f64>(&self.params.cast(), csi, seq_len),
        }
    }

    /// Runs the encoder on normalized DPS rows (`[n·seq_len, n_bins]`).
    pub fn encode_normalized(&self, dps: &[f64], seq_len: usize) -> Result<Vec<f64>> {
        match self.config().precision {
            Precision::F32 => run_encoder::<f32>(&self.params, dps, seq_len),
            Precision::F64 => run_encoder::<f64>(&self.params.cast(), dps, seq_len),
        }
    }

    /// Extrapolates linear-power DPS for one sequence of raw CSI samples.
    pub fn predict_dps(&self, csi: &[CsiSample], delay_step: f64) -> Result<Vec<DelayPowerSpectrum>> {
        if csi.is_empty() {
            return Err(Error::Config("predict_dps needs at least one CSI sample".into()));
        }
        if csi.iter().any(|c| !(c.magnitude.is_finite() && c.phase.is_finite())) {
            return Err(Error::NonFinite("csi input"));
        }
        let cfg = self.config();
        if cfg.csi_dim != 2 {
            return Err(Error::CheckpointMismatch("csi_dim must be 2 for (magnitude, phase)".into()));
        }
        let mut x = Vec::with_capacity(csi.len() * 2);
        for c in csi {
            x.extend_from_slice(&self.norm.csi_normalize(*c));
        }
        let out = self.decode_normalized(&x, csi.len())?;
        Ok(out
            .chunks_exact(cfg.n_bins)
            .map(|row| self.norm.dps_denormalize(row, delay_step))
            .collect())
    }
}

fn run<T: Real>(params: &C2sParameters<T>, csi: &[f64], seq_len: usize) -> Result<Vec<f64>> {
    let dim = params.config.csi_dim;
    let rows = csi.len() / dim;
    let x = Tensor::new(&[rows, dim], csi.iter().map(|&v| T::of(v)).collect())?;
    let y = decode_batch(params, &x, seq_len)?;
    Ok(y.data().iter().map(|v| v.as_f64()).collect())
}

fn run_encoder<T: Real>(params: &C2sParameters<T>, dps: &[f64], seq_len: usize) -> Result<Vec<f64>> {
    let n_bins = params.config.n_bins;
    let x = Tensor::new(&[dps.len() / n_bins, n_bins], dps.iter().map(|&v| T::of(v)).collect())?;
    let z = encode_batch(params, &x, seq_len)?;
    Ok(z.data().iter().map(|v| v.as_f64()).collect())
}
