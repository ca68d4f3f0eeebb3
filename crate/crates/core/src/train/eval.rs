use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::batch::NormalizedData;
use super::split::Split;
use crate::error::{Error, Result};
use crate::model::{decode_batch, C2sCheckpoint, C2sParameters};
use crate::real::Real;
use crate::sounding::{Dataset, Provenance, WindowRef};

/// Rows per forward pass during evaluation.
const CHUNK_ROWS: usize = 512;

/// Mean squared error of `decode(true CSI)` against the true DPS over
/// `windows`, in normalized units.
pub fn decode_mse<T: Real>(
    params: &C2sParameters<T>,
    data: &NormalizedData,
    windows: &[WindowRef],
    n_p: usize,
) -> Result<f64> {
    let per_chunk = (CHUNK_ROWS / n_p).max(1);
    let mut sum = 0.0;
    let mut count = 0usize;
    for chunk in windows.chunks(per_chunk) {
        let (p, c) = data.gather::<T>(chunk, n_p)?;
        let y = decode_batch(params, &c, n_p)?;
        for (a, b) in y.data().iter().zip(p.data()) {
            let d = a.as_f64() - b.as_f64();
            sum += d * d;
        }
        count += p.numel();
    }
    Ok(if count > 0 { sum / count as f64 } else { f64::NAN })
}

/// One window length of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub n_p: usize,
    pub n_windows: usize,
    pub mse_baseline: f64,
    pub mse_ae: f64,
    /// `mse(P, decode(encode(P)))` of the autoencoder.
    pub ae_roundtrip_mse: f64,
    pub latency_ms_mean: Option<f64>,
    pub latency_ms_std: Option<f64>,
}

impl EvalRow {
    /// `(baseline − ae) / baseline · 100`; zero when both are equal.
    pub fn improvement_pct(&self) -> f64 {
        improvement_pct(self.mse_baseline, self.mse_ae)
    }
}

pub fn improvement_pct(baseline: f64, ae: f64) -> f64 {
    if baseline == ae {
        0.0
    } else {
        (baseline - ae) / baseline * 100.0
    }
}

/// Normalized predictions and targets behind one [`EvalRow`], row-major
/// `[n_windows · n_p, n_bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPredictions {
    pub n_p: usize,
    pub windows: Vec<WindowRef>,
    pub target: Vec<f64>,
    pub ae: Vec<f64>,
    pub baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub seeds: Vec<u64>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub predictions: Vec<EvalPredictions>,
}

/// Test MSE of both models through `decode(true CSI)` for every window length
/// in `n_p_list`, on the test windows of `split`.
///
/// Both checkpoints must carry identical normalization statistics.
pub fn evaluate_mse(
    ae: &C2sCheckpoint,
    baseline: &C2sCheckpoint,
    dataset: &Dataset,
    split: &Split,
    n_p_list: &[usize],
    keep_predictions: bool,
) -> Result<EvalReport> {
    if ae.norm != baseline.norm {
        return Err(Error::NormStatsMismatch);
    }
    if ae.config().n_bins != dataset.n_bins || baseline.config().n_bins != dataset.n_bins {
        return Err(Error::CheckpointMismatch("checkpoint bin count differs from dataset".into()));
    }
    let data = NormalizedData::new(dataset, &ae.norm);
    let mut rows = Vec::with_capacity(n_p_list.len());
    let mut predictions = Vec::new();
    for &n_p in n_p_list {
        if n_p == 0 {
            return Err(Error::Config("N_p must be >= 1".into()));
        }
        let windows = split.windows_for(n_p).test;
        if windows.is_empty() {
            return Err(Error::TooFewPositions(alloc::format!("no test windows at N_p = {n_p}")));
        }
        let mut acc = Acc::default();
        let mut kept = EvalPredictions {
            n_p,
            windows: Vec::new(),
            target: Vec::new(),
            ae: Vec::new(),
            baseline: Vec::new(),
        };
        for chunk in windows.chunks((CHUNK_ROWS / n_p).max(1)) {
            let (p, c) = data.gather::<f64>(chunk, n_p)?;
            let yb = baseline.decode_normalized(c.data(), n_p)?;
            let ya = ae.decode_normalized(c.data(), n_p)?;
            let z = ae.encode_normalized(p.data(), n_p)?;
            let yr = ae.decode_normalized(&z, n_p)?;
            for i in 0..p.numel() {
                let t = p.data()[i];
                acc.base += sq(yb[i] - t);
                acc.ae += sq(ya[i] - t);
                acc.round += sq(yr[i] - t);
            }
            acc.n += p.numel();
            if keep_predictions {
                kept.windows.extend_from_slice(chunk);
                kept.target.extend_from_slice(p.data());
                kept.ae.extend_from_slice(&ya);
                kept.baseline.extend_from_slice(&yb);
            }
        }
        let n = acc.n as f64;
        rows.push(EvalRow {
            n_p,
            n_windows: windows.len(),
            mse_baseline: acc.base / n,
            mse_ae: acc.ae / n,
            ae_roundtrip_mse: acc.round / n,
            latency_ms_mean: None,
            latency_ms_std: None,
        });
        if keep_predictions {
            predictions.push(kept);
        }
    }
    Ok(EvalReport {
        rows,
        seeds: alloc::vec![ae.meta.seed],
        provenance: dataset.provenance.clone(),
        predictions,
    })
}

#[derive(Default)]
struct Acc {
    base: f64,
    ae: f64,
    round: f64,
    n: usize,
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Mean and population std across seeds for one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub n_p: usize,
    pub seeds: usize,
    pub mse_ae_mean: f64,
    pub mse_ae_std: f64,
    pub mse_baseline_mean: f64,
    pub mse_baseline_std: f64,
}

impl SeedSummary {
    pub fn improvement_pct(&self) -> f64 {
        improvement_pct(self.mse_baseline_mean, self.mse_ae_mean)
    }
}

/// Aggregates per-seed reports row by row; rows are matched on `n_p`.
pub fn summarize(reports: &[EvalReport]) -> Vec<SeedSummary> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .map(|r| {
            let ae: Vec<f64> = collect(reports, r.n_p, |x| x.mse_ae);
            let base: Vec<f64> = collect(reports, r.n_p, |x| x.mse_baseline);
            let (am, asd) = mean_std(&ae);
            let (bm, bsd) = mean_std(&base);
            SeedSummary {
                n_p: r.n_p,
                seeds: ae.len(),
                mse_ae_mean: am,
                mse_ae_std: asd,
                mse_baseline_mean: bm,
                mse_baseline_std: bsd,
            }
        })
        .collect()
}

fn collect(reports: &[EvalReport], n_p: usize, f: impl Fn(&EvalRow) -> f64) -> Vec<f64> {
    reports
        .iter()
        .filter_map(|rep| rep.rows.iter().find(|x| x.n_p == n_p).map(&f))
        .collect()
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, libm::sqrt(v))
}
