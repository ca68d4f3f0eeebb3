//! The supervised autoencoder: an encoder from DPS to CSI and a decoder from
//! CSI back to DPS, both transformer stacks without positional encoding, plus
//! the decoder-only baseline.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{C2sCheckpoint, ModelKind, TrainingMeta};
pub use config::{ModelConfig, Precision};
pub use forward::{
    baseline_loss, baseline_loss_graph, decode, decode_batch, decode_graph, encode, encode_batch, encode_graph,
    joint_loss, joint_loss_graph, LossTerms, LossVars,
};
pub use params::{BlockIx, C2sParameters, Layout, LinearIx, StackIx};
