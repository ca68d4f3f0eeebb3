use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::PathSet;
use crate::error::{Error, Result};
use crate::sounding::DelayPowerSpectrum;
use crate::SPEED_OF_LIGHT;

/// One path read off a delay power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEstimate {
    pub delay_s: f64,
    /// Linear power.
    pub power: f64,
    /// `c · delay`.
    pub range_m: f64,
}

impl PathEstimate {
    pub fn from_delay(delay_s: f64, power: f64) -> Self {
        Self {
            delay_s,
            power,
            range_m: SPEED_OF_LIGHT * delay_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeakConfig {
    /// Detection threshold relative to the strongest bin, dB (< 0).
    pub threshold_db: f64,
    pub min_separation_bins: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            threshold_db: -25.0,
            min_separation_bins: 2,
        }
    }
}

/// Extracts paths from a DPS.
///
/// Candidates are local maxima above `max · 10^(threshold_db/10)`. They are
/// accepted strongest first unless closer than `min_separation_bins` to an
/// accepted peak. Each estimate sits at its peak bin; its power is the peak
/// bin plus its two neighbours, with a neighbour shared by two peaks split
/// evenly between them. The result is sorted by delay; an all-zero DPS
/// yields no paths.
pub fn extract_paths(d: &DelayPowerSpectrum, threshold_db: f64, min_separation_bins: usize) -> Result<Vec<PathEstimate>> {
    if !(threshold_db < 0.0) {
        return Err(Error::Config("threshold_db must be negative".into()));
    }
    let p = &d.power;
    let n = p.len();
    let max = p.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Ok(Vec::new());
    }
    let level = max * libm::pow(10.0, threshold_db / 10.0);
    let mut cand: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = if k > 0 { p[k - 1] } else { f64::NEG_INFINITY };
            let right = if k + 1 < n { p[k + 1] } else { f64::NEG_INFINITY };
            p[k] >= level && p[k] > left && p[k] >= right
        })
        .collect();
    cand.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let sep = min_separation_bins.max(1);
    let mut accepted: Vec<usize> = Vec::new();
    for k in cand {
        if accepted.iter().all(|&a| a.abs_diff(k) >= sep) {
            accepted.push(k);
        }
    }
    accepted.sort_unstable();
    let owners = |j: usize| accepted.iter().filter(|&&a| a.abs_diff(j) <= 1).count().max(1) as f64;
    Ok(accepted
        .iter()
        .map(|&k| {
            let mut power = p[k];
            for j in [k.wrapping_sub(1), k + 1] {
                if j < n && !accepted.contains(&j) {
                    power += p[j] / owners(j);
                }
            }
            PathEstimate::from_delay(k as f64 * d.delay_step, power)
        })
        .collect())
}

/// A true path paired with an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMatch {
    pub true_index: usize,
    pub est_index: usize,
    /// Estimated minus true delay.
    pub delay_error_s: f64,
    /// Estimated minus true range.
    pub range_error_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RangingReport {
    pub matches: Vec<PathMatch>,
    /// Indices of true paths without an estimate.
    pub missed: Vec<usize>,
    /// Indices of estimates without a true path.
    pub false_alarms: Vec<usize>,
}

impl RangingReport {
    pub fn max_abs_delay_error(&self) -> f64 {
        self.matches.iter().map(|m| m.delay_error_s.abs()).fold(0.0, f64::max)
    }
}

/// Greedy nearest-delay matching: all (truth, estimate) pairs are visited in
/// order of increasing delay distance and paired when both are free and the
/// distance is within `gate_s` (unbounded when `None`).
pub fn ranging_error(truth: &PathSet, est: &[PathEstimate], gate_s: Option<f64>) -> RangingReport {
    let t = truth.paths();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(t.len() * est.len());
    for (i, tp) in t.iter().enumerate() {
        for (j, e) in est.iter().enumerate() {
            let d = (e.delay_s - tp.delay_s).abs();
            if gate_s.is_none_or(|g| d <= g) {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut t_used = alloc::vec![false; t.len()];
    let mut e_used = alloc::vec![false; est.len()];
    let mut matches = Vec::new();
    for (_, i, j) in pairs {
        if t_used[i] || e_used[j] {
            continue;
        }
        t_used[i] = true;
        e_used[j] = true;
        let de = est[j].delay_s - t[i].delay_s;
        matches.push(PathMatch {
            true_index: i,
            est_index: j,
            delay_error_s: de,
            range_error_m: est[j].range_m - SPEED_OF_LIGHT * t[i].delay_s,
        });
    }
    matches.sort_by_key(|m| m.true_index);
    RangingReport {
        matches,
        missed: (0..t.len()).filter(|&i| !t_used[i]).collect(),
        false_alarms: (0..est.len()).filter(|&j| !e_used[j]).collect(),
    }
}
