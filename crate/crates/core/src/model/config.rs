use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndiff::Reduction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

/// Shape and loss settings shared by the encoder and decoder stacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Transformer blocks per stack.
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub ffn_width: usize,
    pub n_bins: usize,
    pub csi_dim: usize,
    pub precision: Precision,
    pub seed: u64,
    pub ln_eps: f64,
    /// Weight of the latent (CSI) term in the joint loss.
    pub latent_weight: f64,
    pub reduction: Reduction,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            ffn_width: 256,
            n_bins: 1023,
            csi_dim: 2,
            precision: Precision::F32,
            seed: 0,
            ln_eps: 1e-5,
            latent_weight: 1.0,
            reduction: Reduction::Mean,
        }
    }
}

impl ModelConfig {
    /// Six blocks per stack.
    pub fn full_depth() -> Self {
        Self {
            n_layers: 6,
            ..Self::default()
        }
    }

    /// Tiny configuration for gradient checks.
    pub fn micro() -> Self {
        Self {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            ffn_width: 16,
            n_bins: 16,
            precision: Precision::F64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::Config("n_layers must be >= 1".into()));
        }
        if self.n_heads == 0 || self.d_model == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(alloc::format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model,
                self.n_heads
            )));
        }
        if self.ffn_width == 0 || self.n_bins == 0 || self.csi_dim == 0 {
            return Err(Error::Config("ffn_width, n_bins and csi_dim must be >= 1".into()));
        }
        if !(self.ln_eps > 0.0) || !(self.latent_weight >= 0.0) {
            return Err(Error::Config("ln_eps must be > 0 and latent_weight >= 0".into()));
        }
        Ok(())
    }
}
