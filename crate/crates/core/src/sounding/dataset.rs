use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dps::{cir_to_csi, cir_to_dps, CsiBin};
use super::norm::NormStats;
use crate::channel::{sound_cir, synth_cir, PathSet, Scenario, SoundingConfig, Trajectory};
use crate::channel::uniform_phase;
use crate::error::{Error, Result};

/// How CIRs are produced from path sets when building a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoundingMethod {
    /// Ideal band-limited taps plus per-period noise.
    #[default]
    Synth,
    /// Full PN transmission and correlation (slow).
    Sound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    /// Antenna pairs per trajectory.
    pub n_pairs: usize,
    pub n_p: usize,
    pub snr_db: f64,
    pub method: SoundingMethod,
    pub csi_bin: CsiBin,
    pub floor_db: f64,
    /// Fraction of trailing positions held out when fitting the stored
    /// normalization statistics.
    pub test_fraction: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_pairs: 8,
            n_p: 1,
            snr_db: 25.0,
            method: SoundingMethod::Synth,
            csi_bin: CsiBin::Dc,
            floor_db: -120.0,
            test_fraction: 0.3,
        }
    }
}

/// Generator settings and seed that produced a dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub generator: String,
}

/// Consecutive positions of one antenna pair along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub pair: u32,
    pub is_los: bool,
    pub first_position: u32,
    dps: Vec<f32>,
    csi: Vec<f32>,
}

impl Sequence {
    /// `dps` is `len × n_bins` linear power, `csi` is `len × 2`
    /// (magnitude, phase).
    pub fn new(pair: u32, is_los: bool, first_position: u32, n_bins: usize, dps: Vec<f32>, csi: Vec<f32>) -> Result<Self> {
        if !csi.len().is_multiple_of(2) || dps.len() != (csi.len() / 2) * n_bins {
            return Err(Error::LengthMismatch {
                expected: (csi.len() / 2) * n_bins,
                found: dps.len(),
            });
        }
        if dps.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || csi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sequence payload"));
        }
        Ok(Self {
            pair,
            is_los,
            first_position,
            dps,
            csi,
        })
    }

    pub fn len(&self) -> usize {
        self.csi.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.csi.is_empty()
    }

    pub fn dps(&self) -> &[f32] {
        &self.dps
    }

    pub fn csi(&self) -> &[f32] {
        &self.csi
    }
}

/// A window of `n_p` consecutive rows: sequence index and first row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowRef {
    pub seq: u32,
    pub start: u32,
}

/// Borrowed view of one window.
#[derive(Debug, Clone, Copy)]
pub struct SampleWindow<'a> {
    /// `n_p × n_bins`, linear power.
    pub dps: &'a [f32],
    /// `n_p × 2`, (magnitude, phase).
    pub csi: &'a [f32],
    pub n_p: usize,
    pub pair: u32,
    pub start_position: u32,
    pub is_los: bool,
}

/// Number of sliding windows of `n_p` rows over sequences of the given
/// lengths.
pub fn window_count(lengths: impl IntoIterator<Item = usize>, n_p: usize) -> usize {
    lengths
        .into_iter()
        .map(|l| if l >= n_p && n_p > 0 { l - n_p + 1 } else { 0 })
        .sum()
}

/// Paired DPS/CSI records grouped into per-pair sequences.
///
/// Each row is stored once; windows are sliding views of `n_p` consecutive
/// rows of one sequence, so rows within a window are consecutive positions of
/// the same antenna pair by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_bins: usize,
    pub n_p: usize,
    pub delay_step: f64,
    sequences: Vec<Sequence>,
    pub norm: NormStats,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        n_bins: usize,
        n_p: usize,
        delay_step: f64,
        sequences: Vec<Sequence>,
        norm: NormStats,
        provenance: Provenance,
    ) -> Result<Self> {
        if n_p == 0 || n_bins == 0 {
            return Err(Error::Config("n_p and n_bins must be >= 1".into()));
        }
        for s in &sequences {
            if s.dps.len() != s.len() * n_bins {
                return Err(Error::LengthMismatch {
                    expected: s.len() * n_bins,
                    found: s.dps.len(),
                });
            }
            if s.len() < n_p {
                return Err(Error::TrajectoryTooShort { len: s.len(), n_p });
            }
        }
        norm.validate()?;
        Ok(Self {
            n_bins,
            n_p,
            delay_step,
            sequences,
            norm,
            provenance,
        })
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn n_records(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }

    pub fn window_count(&self, n_p: usize) -> usize {
        window_count(self.sequences.iter().map(Sequence::len), n_p)
    }

    pub fn los_window_count(&self, n_p: usize) -> usize {
        window_count(self.sequences.iter().filter(|s| s.is_los).map(Sequence::len), n_p)
    }

    /// All sliding windows of `n_p` rows in sequence order.
    pub fn windows(&self, n_p: usize) -> Vec<WindowRef> {
        let mut out = Vec::with_capacity(self.window_count(n_p));
        for (i, s) in self.sequences.iter().enumerate() {
            if n_p == 0 || s.len() < n_p {
                continue;
            }
            for start in 0..=(s.len() - n_p) {
                out.push(WindowRef {
                    seq: i as u32,
                    start: start as u32,
                });
            }
        }
        out
    }

    /// View of a window; panics if it does not fit its sequence.
    pub fn window(&self, w: WindowRef, n_p: usize) -> SampleWindow<'_> {
        let s = &self.sequences[w.seq as usize];
        let a = w.start as usize;
        assert!(a + n_p <= s.len(), "window {w:?} with n_p {n_p} exceeds sequence length {}", s.len());
        SampleWindow {
            dps: &s.dps[a * self.n_bins..(a + n_p) * self.n_bins],
            csi: &s.csi[a * 2..(a + n_p) * 2],
            n_p,
            pair: s.pair,
            start_position: s.first_position + w.start,
            is_los: s.is_los,
        }
    }

    /// Refits normalization statistics on the rows selected by
    /// `keep(sequence_index, row)`.
    pub fn fit_norm<F>(&self, floor_db: f64, keep: F) -> Result<NormStats>
    where
        F: Fn(usize, usize) -> bool,
    {
        let mut dps_rows = Vec::new();
        let mut csi_rows = Vec::new();
        for (si, s) in self.sequences.iter().enumerate() {
            for r in 0..s.len() {
                if keep(si, r) {
                    dps_rows.push(&s.dps[r * self.n_bins..(r + 1) * self.n_bins]);
                    csi_rows.push(&s.csi[r * 2..r * 2 + 2]);
                }
            }
        }
        NormStats::fit(dps_rows, csi_rows, floor_db)
    }

    /// Same records, different nominal window length.
    pub fn with_n_p(mut self, n_p: usize) -> Result<Self> {
        if let Some(s) = self.sequences.iter().find(|s| s.len() < n_p) {
            return Err(Error::TrajectoryTooShort { len: s.len(), n_p });
        }
        if n_p == 0 {
            return Err(Error::Config("n_p must be >= 1".into()));
        }
        self.n_p = n_p;
        Ok(self)
    }
}

/// Number of trailing rows held out by a spatial split of `len` rows.
pub(crate) fn held_out_rows(len: usize, test_fraction: f64) -> usize {
    let n = libm::round(len as f64 * test_fraction) as usize;
    n.min(len.saturating_sub(1))
}

/// Sounds every antenna pair at every trajectory position and collects the
/// DPS/CSI records.
///
/// Antenna pairs share the trajectory geometry; each pair applies its own
/// fixed random phase offset to every path. Normalization statistics are fit
/// on the leading `1 - test_fraction` positions of every sequence.
pub fn build_dataset<R: Rng + ?Sized>(
    trajectories: &[Trajectory],
    cfg: &SoundingConfig,
    spec: &DatasetSpec,
    provenance: Provenance,
    rng: &mut R,
) -> Result<Dataset> {
    cfg.validate()?;
    if spec.n_p == 0 || spec.n_pairs == 0 {
        return Err(Error::Config("n_p and n_pairs must be >= 1".into()));
    }
    if let Some(t) = trajectories.iter().find(|t| t.len() < spec.n_p) {
        return Err(Error::TrajectoryTooShort { len: t.len(), n_p: spec.n_p });
    }
    let n_bins = cfg.n_bins;
    let mut sequences = Vec::with_capacity(trajectories.len() * spec.n_pairs);
    let mut pair_index = 0u32;
    for traj in trajectories {
        let n_ids = traj.path_ids().max(1);
        for _ in 0..spec.n_pairs {
            let offsets: Vec<f64> = (0..n_ids).map(|_| uniform_phase(rng)).collect();
            let mut dps = Vec::with_capacity(traj.len() * n_bins);
            let mut csi = Vec::with_capacity(traj.len() * 2);
            for point in &traj.points {
                let paths: PathSet = point.paths.with_phase_offsets(&offsets);
                let cir = match spec.method {
                    SoundingMethod::Synth => synth_cir(&paths, cfg, spec.snr_db, rng)?,
                    SoundingMethod::Sound => sound_cir(&paths, cfg, spec.snr_db, rng)?,
                };
                let d = cir_to_dps(&cir)?;
                let c = cir_to_csi(&cir, spec.csi_bin)?;
                dps.extend(d.power.iter().map(|&p| p as f32));
                csi.push(c.magnitude as f32);
                csi.push(c.phase as f32);
            }
            let first = traj.points.first().map_or(0, |p| p.position);
            sequences.push(Sequence::new(
                pair_index,
                traj.scenario == Scenario::Los,
                first,
                n_bins,
                dps,
                csi,
            )?);
            pair_index += 1;
        }
    }
    let mut keep_rows = Vec::with_capacity(sequences.len());
    for s in &sequences {
        keep_rows.push(s.len() - held_out_rows(s.len(), spec.test_fraction));
    }
    let placeholder = NormStats {
        floor_db: spec.floor_db,
        dps_mean_db: 0.0,
        dps_std_db: 1.0,
        csi_mag_mean: 0.0,
        csi_mag_std: 1.0,
        version: super::norm::NORM_STATS_VERSION,
    };
    let mut ds = Dataset::new(n_bins, spec.n_p, cfg.delay_step(), sequences, placeholder, provenance)?;
    ds.norm = ds.fit_norm(spec.floor_db, |si, r| r < keep_rows[si])?;
    Ok(ds)
}
