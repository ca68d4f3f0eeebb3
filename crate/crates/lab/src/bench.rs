use std::time::Instant;

use c2s_core::model::C2sCheckpoint;
use c2s_core::train::mean_std;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_REPEATS: usize = 1000;
const WARMUP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub n_p: usize,
    pub repeats: usize,
    pub latency_ms_mean: f64,
    pub latency_ms_std: f64,
}

/// Times the decoder on one sequence of `n_p` CSI samples (batch size 1).
/// Warmup runs are excluded; runs happen on the calling thread only.
pub fn benchmark_inference(ckpt: &C2sCheckpoint, n_p_list: &[usize], repeats: usize, seed: u64) -> Result<Vec<LatencyRow>> {
    if repeats == 0 {
        return Err(LabError::Usage("repeats must be >= 1".into()));
    }
    if n_p_list.contains(&0) {
        return Err(LabError::Usage("N_p values must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = ckpt.config().csi_dim;
    let mut rows = Vec::with_capacity(n_p_list.len());
    for &n_p in n_p_list {
        let csi: Vec<f64> = (0..n_p * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for _ in 0..WARMUP {
            std::hint::black_box(ckpt.decode_normalized(&csi, n_p)?);
        }
        let mut ms = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t = Instant::now();
            std::hint::black_box(ckpt.decode_normalized(std::hint::black_box(&csi), n_p)?);
            ms.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let (mean, std) = mean_std(&ms);
        rows.push(LatencyRow {
            n_p,
            repeats,
            latency_ms_mean: mean,
            latency_ms_std: std,
        });
    }
    Ok(rows)
}
