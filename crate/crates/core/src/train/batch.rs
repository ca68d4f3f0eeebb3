use alloc::vec::Vec;

use crate::error::Result;
use crate::ndiff::Tensor;
use crate::real::Real;
use crate::sounding::{CsiSample, Dataset, NormStats, WindowRef};

/// A dataset mapped once into normalized model units.
#[derive(Debug, Clone)]
pub struct NormalizedData {
    pub n_bins: usize,
    dps: Vec<Vec<f32>>,
    csi: Vec<Vec<f32>>,
}

impl NormalizedData {
    pub fn new(dataset: &Dataset, norm: &NormStats) -> Self {
        let mut dps = Vec::with_capacity(dataset.sequences().len());
        let mut csi = Vec::with_capacity(dataset.sequences().len());
        for s in dataset.sequences() {
            dps.push(s.dps().iter().map(|&p| norm.normalize_power(p as f64) as f32).collect());
            csi.push(
                s.csi()
                    .chunks_exact(2)
                    .flat_map(|c| {
                        norm.csi_normalize(CsiSample {
                            magnitude: c[0] as f64,
                            phase: c[1] as f64,
                        })
                    })
                    .map(|v| v as f32)
                    .collect(),
            );
        }
        Self {
            n_bins: dataset.n_bins,
            dps,
            csi,
        }
    }

    pub fn dps_rows(&self, w: WindowRef, n_p: usize) -> &[f32] {
        let a = w.start as usize * self.n_bins;
        &self.dps[w.seq as usize][a..a + n_p * self.n_bins]
    }

    pub fn csi_rows(&self, w: WindowRef, n_p: usize) -> &[f32] {
        let a = w.start as usize * 2;
        &self.csi[w.seq as usize][a..a + n_p * 2]
    }

    /// Stacks windows into `[k·n_p, n_bins]` DPS and `[k·n_p, 2]` CSI tensors.
    pub fn gather<T: Real>(&self, windows: &[WindowRef], n_p: usize) -> Result<(Tensor<T>, Tensor<T>)> {
        let rows = windows.len() * n_p;
        let mut p = Vec::with_capacity(rows * self.n_bins);
        let mut c = Vec::with_capacity(rows * 2);
        for &w in windows {
            p.extend(self.dps_rows(w, n_p).iter().map(|&v| T::of(v as f64)));
            c.extend(self.csi_rows(w, n_p).iter().map(|&v| T::of(v as f64)));
        }
        Ok((Tensor::new(&[rows, self.n_bins], p)?, Tensor::new(&[rows, 2], c)?))
    }
}
