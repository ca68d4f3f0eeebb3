//! Measurement post-processing: CIR to DPS and CSI, normalization, and the
//! windowed dataset container.

mod dataset;
mod dps;
mod norm;

pub use dataset::{
    build_dataset, window_count, Dataset, DatasetSpec, Provenance, SampleWindow, Sequence, SoundingMethod,
    WindowRef,
};
pub use dps::{cir_to_csi, cir_to_dps, csi_bin_index, CsiBin, CsiSample, DelayPowerSpectrum};
pub use norm::{NormStats, NORM_STATS_VERSION};

pub(crate) use dataset::held_out_rows;
