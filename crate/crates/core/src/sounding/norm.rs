use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dps::{CsiSample, DelayPowerSpectrum};
use crate::error::{Error, Result};

pub const NORM_STATS_VERSION: u32 = 1;

/// Statistics that map DPS and CSI into the model's standardized space.
///
/// DPS bins are converted to dB (clipped at `floor_db`) and standardized
/// with one global mean and std. CSI magnitude is standardized linearly;
/// phase passes through in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub floor_db: f64,
    pub dps_mean_db: f64,
    pub dps_std_db: f64,
    pub csi_mag_mean: f64,
    pub csi_mag_std: f64,
    pub version: u32,
}

#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n > 0.0 {
            libm::sqrt(self.m2 / self.n)
        } else {
            0.0
        }
    }
}

impl NormStats {
    /// Fits statistics to DPS rows (linear power) and CSI `(magnitude, phase)`
    /// rows.
    pub fn fit<'a, D, C>(dps_rows: D, csi_rows: C, floor_db: f64) -> Result<Self>
    where
        D: IntoIterator<Item = &'a [f32]>,
        C: IntoIterator<Item = &'a [f32]>,
    {
        let floor = libm::pow(10.0, floor_db / 10.0);
        let mut dps = Moments::default();
        for row in dps_rows {
            for &p in row {
                dps.push(10.0 * libm::log10((p as f64).max(floor)));
            }
        }
        let mut mag = Moments::default();
        for row in csi_rows {
            mag.push(row[0] as f64);
        }
        let s = Self {
            floor_db,
            dps_mean_db: dps.mean,
            dps_std_db: dps.std(),
            csi_mag_mean: mag.mean,
            csi_mag_std: mag.std(),
            version: NORM_STATS_VERSION,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dps_std_db > 0.0 && self.dps_std_db.is_finite()) {
            return Err(Error::DegenerateStats("dps std must be > 0"));
        }
        if !(self.csi_mag_std > 0.0 && self.csi_mag_std.is_finite()) {
            return Err(Error::DegenerateStats("csi magnitude std must be > 0"));
        }
        if !(self.floor_db.is_finite() && self.dps_mean_db.is_finite() && self.csi_mag_mean.is_finite()) {
            return Err(Error::DegenerateStats("non-finite statistics"));
        }
        Ok(())
    }

    #[inline]
    pub fn normalize_power(&self, p: f64) -> f64 {
        let floor = libm::pow(10.0, self.floor_db / 10.0);
        (10.0 * libm::log10(p.max(floor)) - self.dps_mean_db) / self.dps_std_db
    }

    #[inline]
    pub fn denormalize_power(&self, x: f64) -> f64 {
        libm::pow(10.0, (x * self.dps_std_db + self.dps_mean_db) / 10.0)
    }

    pub fn dps_normalize(&self, d: &DelayPowerSpectrum) -> Vec<f64> {
        d.power.iter().map(|&p| self.normalize_power(p)).collect()
    }

    pub fn dps_denormalize(&self, x: &[f64], delay_step: f64) -> DelayPowerSpectrum {
        DelayPowerSpectrum {
            power: x.iter().map(|&v| self.denormalize_power(v)).collect(),
            delay_step,
        }
    }

    pub fn csi_normalize(&self, c: CsiSample) -> [f64; 2] {
        [(c.magnitude - self.csi_mag_mean) / self.csi_mag_std, c.phase]
    }

    /// Inverse of [`NormStats::csi_normalize`]; a negative magnitude (possible
    /// for model outputs) is clipped to zero.
    pub fn csi_denormalize(&self, x: [f64; 2]) -> CsiSample {
        CsiSample {
            magnitude: (x[0] * self.csi_mag_std + self.csi_mag_mean).max(0.0),
            phase: x[1],
        }
    }
}
