use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Cir;
use crate::error::{Error, Result};

/// Power per delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPowerSpectrum {
    pub power: Vec<f64>,
    /// Seconds per bin.
    pub delay_step: f64,
}

impl DelayPowerSpectrum {
    pub fn new(power: Vec<f64>, delay_step: f64) -> Result<Self> {
        if power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::NonFinite("delay power spectrum (negative or non-finite bin)"));
        }
        Ok(Self { power, delay_step })
    }

    pub fn n_bins(&self) -> usize {
        self.power.len()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// CSI of one antenna pair at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsiSample {
    pub magnitude: f64,
    /// Radians in `(-π, π]`.
    pub phase: f64,
}

impl CsiSample {
    pub fn from_complex(h: Complex64) -> Self {
        let mut phase = h.arg();
        if phase <= -PI {
            phase = PI;
        }
        Self {
            magnitude: h.norm(),
            phase,
        }
    }
}

/// Which DFT bin of the delay axis stands for the RF centre frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiBin {
    /// Baseband DC, bin 0.
    #[default]
    Dc,
    /// Middle bin, `n_bins / 2`.
    Mid,
}

pub fn csi_bin_index(bin: CsiBin, n_bins: usize) -> usize {
    match bin {
        CsiBin::Dc => 0,
        CsiBin::Mid => n_bins / 2,
    }
}

/// `power[k] = mean over periods of |taps[p, k]|²`.
pub fn cir_to_dps(c: &Cir) -> Result<DelayPowerSpectrum> {
    if c.periods() == 0 || c.n_bins() == 0 {
        return Err(Error::EmptyCir);
    }
    let mut power = vec![0.0; c.n_bins()];
    for p in 0..c.periods() {
        for (acc, t) in power.iter_mut().zip(c.period(p)) {
            *acc += t.norm_sqr();
        }
    }
    let inv = 1.0 / c.periods() as f64;
    power.iter_mut().for_each(|v| *v *= inv);
    DelayPowerSpectrum::new(power, c.delay_step)
}

/// DFT of the period-averaged CIR over the delay axis, evaluated at one bin.
pub fn cir_to_csi(c: &Cir, bin: CsiBin) -> Result<CsiSample> {
    if c.periods() == 0 || c.n_bins() == 0 {
        return Err(Error::EmptyCir);
    }
    let h = c.mean_taps();
    let n = h.len();
    let k = csi_bin_index(bin, n);
    let mut acc = Complex64::new(0.0, 0.0);
    if k == 0 {
        for t in &h {
            acc += *t;
        }
    } else {
        // twiddle index kept exact with integer arithmetic
        for (i, t) in h.iter().enumerate() {
            let idx = (k * i) % n;
            let ang = -2.0 * PI * idx as f64 / n as f64;
            acc += *t * Complex64::from_polar(1.0, ang);
        }
    }
    Ok(CsiSample::from_complex(acc))
}
