use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::paths::PathSet;
use super::pn::{default_taps, generate_pn_sequence};
use crate::error::{Error, Result};
use crate::ndiff::kernels::dot;

/// Sounder parameters. Defaults follow the measured setup: PN10 at 160 MHz
/// bandwidth, 200 MHz sampling, 128 periods, 3.5 GHz carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoundingConfig {
    pub sampling_rate_hz: f64,
    pub bandwidth_hz: f64,
    pub pn_degree: u32,
    pub periods: usize,
    pub n_bins: usize,
    pub carrier_hz: f64,
    /// Half-width, in taps, of the windowed-sinc placement kernel.
    pub kernel_half_width: usize,
}

impl Default for SoundingConfig {
    fn default() -> Self {
        Self {
            sampling_rate_hz: 200e6,
            bandwidth_hz: 160e6,
            pn_degree: 10,
            periods: 128,
            n_bins: 1023,
            carrier_hz: 3.5e9,
            kernel_half_width: 8,
        }
    }
}

impl SoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=24).contains(&self.pn_degree) || self.n_bins != (1usize << self.pn_degree) - 1 {
            return Err(Error::Config(alloc::format!(
                "n_bins {} must equal 2^pn_degree - 1 (pn_degree {})",
                self.n_bins,
                self.pn_degree
            )));
        }
        if !(self.sampling_rate_hz > 0.0 && self.bandwidth_hz > 0.0) || self.sampling_rate_hz < self.bandwidth_hz {
            return Err(Error::Config("sampling rate must be positive and >= bandwidth".into()));
        }
        if self.periods == 0 {
            return Err(Error::Config("periods must be >= 1".into()));
        }
        Ok(())
    }

    /// Seconds per delay bin.
    pub fn delay_step(&self) -> f64 {
        1.0 / self.sampling_rate_hz
    }

    /// Extent of the delay grid, `n_bins · Δτ`.
    pub fn delay_extent(&self) -> f64 {
        self.n_bins as f64 * self.delay_step()
    }
}

/// Complex channel impulse response, `periods × n_bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    taps: Vec<Complex64>,
    periods: usize,
    n_bins: usize,
    pub delay_step: f64,
    pub position: u32,
}

impl Cir {
    pub fn new(taps: Vec<Complex64>, periods: usize, n_bins: usize, delay_step: f64, position: u32) -> Result<Self> {
        if taps.len() != periods * n_bins {
            return Err(Error::LengthMismatch {
                expected: periods * n_bins,
                found: taps.len(),
            });
        }
        if !(delay_step > 0.0) {
            return Err(Error::Config("delay step must be positive".into()));
        }
        if taps.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return Err(Error::NonFinite("cir taps"));
        }
        Ok(Self {
            taps,
            periods,
            n_bins,
            delay_step,
            position,
        })
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn period(&self, p: usize) -> &[Complex64] {
        &self.taps[p * self.n_bins..(p + 1) * self.n_bins]
    }

    /// Average of the taps over repetition periods.
    pub fn mean_taps(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n_bins];
        for p in 0..self.periods {
            for (a, t) in acc.iter_mut().zip(self.period(p)) {
                *a += *t;
            }
        }
        let inv = 1.0 / self.periods.max(1) as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        acc
    }
}

/// Per-tap complex noise power for `snr_db`, referenced to the total path
/// power (unit power when there are no paths). Infinite SNR gives zero.
pub fn noise_power(paths: &PathSet, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let p = paths.total_power();
    let reference = if p > 0.0 { p } else { 1.0 };
    reference * libm::pow(10.0, -snr_db / 10.0)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

/// Energy-normalized Hann-windowed sinc centred at fractional bin `u`,
/// wrapped circularly onto `n_bins` taps and accumulated into `out` with
/// weight `gain`.
fn place_kernel(out: &mut [Complex64], u: f64, gain: Complex64, half_width: usize) {
    let n = out.len() as i64;
    let centre = libm::round(u);
    if u == centre {
        let k = (centre as i64).rem_euclid(n) as usize;
        out[k] += gain;
        return;
    }
    let hw = half_width as i64;
    let span = (half_width + 1) as f64;
    let mut w = Vec::with_capacity(2 * half_width + 1);
    for off in -hw..=hw {
        let x = centre + off as f64 - u;
        let win = libm::cos(PI * x / (2.0 * span));
        w.push(sinc(x) * win * win);
    }
    let norm = libm::sqrt(w.iter().map(|v| v * v).sum::<f64>());
    for (i, off) in (-hw..=hw).enumerate() {
        let k = (centre as i64 + off).rem_euclid(n) as usize;
        out[k] += gain * (w[i] / norm);
    }
}

/// Noise-free band-limited taps of `paths` on the sounder's delay grid.
pub fn synth_taps(paths: &PathSet, cfg: &SoundingConfig) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_bins];
    let dt = cfg.delay_step();
    for p in paths.paths() {
        place_kernel(&mut h, p.delay_s / dt, p.gain, cfg.kernel_half_width);
    }
    h
}

fn complex_noise<R: Rng + ?Sized>(power: f64, rng: &mut R) -> Complex64 {
    let s = libm::sqrt(power / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Ideal CIR record: the static band-limited channel repeated over
/// `cfg.periods` periods with independent complex Gaussian noise per period.
pub fn synth_cir<R: Rng + ?Sized>(paths: &PathSet, cfg: &SoundingConfig, snr_db: f64, rng: &mut R) -> Result<Cir> {
    let h = synth_taps(paths, cfg);
    let np = noise_power(paths, snr_db);
    let mut taps = Vec::with_capacity(cfg.periods * cfg.n_bins);
    for _ in 0..cfg.periods {
        for &t in &h {
            taps.push(if np > 0.0 { t + complex_noise(np, rng) } else { t });
        }
    }
    Cir::new(taps, cfg.periods, cfg.n_bins, cfg.delay_step(), 0)
}

/// Emulates PN channel sounding.
///
/// Each period the ±1 m-sequence is circularly convolved with the channel,
/// receiver noise is added at `snr_db` (per-sample SNR, referenced as in
/// [`noise_power`]), and the received period is circularly correlated with
/// the sequence and divided by its length. The correlation gain lowers the
/// per-bin noise by a factor of the sequence length relative to
/// [`synth_cir`] at the same `snr_db`.
pub fn sound_cir<R: Rng + ?Sized>(paths: &PathSet, cfg: &SoundingConfig, snr_db: f64, rng: &mut R) -> Result<Cir> {
    let taps = default_taps(cfg.pn_degree)
        .ok_or_else(|| Error::Config(alloc::format!("no tabulated polynomial for degree {}", cfg.pn_degree)))?;
    let pn = generate_pn_sequence(cfg.pn_degree, taps)?;
    sound_cir_with(paths, cfg, &pn, snr_db, rng)
}

/// [`sound_cir`] with an explicit sounding sequence.
pub fn sound_cir_with<R: Rng + ?Sized>(
    paths: &PathSet,
    cfg: &SoundingConfig,
    pn: &[f64],
    snr_db: f64,
    rng: &mut R,
) -> Result<Cir> {
    let n = cfg.n_bins;
    if pn.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: pn.len(),
        });
    }
    let h = synth_taps(paths, cfg);
    let support: Vec<(usize, Complex64)> = h
        .iter()
        .enumerate()
        .filter(|(_, t)| t.re != 0.0 || t.im != 0.0)
        .map(|(i, t)| (i, *t))
        .collect();
    // y[n] = Σ_m h[m] s[(n - m) mod N]
    let mut clean_re = vec![0.0; n];
    let mut clean_im = vec![0.0; n];
    for &(m, hm) in &support {
        for i in 0..n {
            let s = pn[(i + n - m) % n];
            clean_re[i] += hm.re * s;
            clean_im[i] += hm.im * s;
        }
    }
    let np = noise_power(paths, snr_db);
    let inv_n = 1.0 / n as f64;
    let mut rx_re = vec![0.0; n];
    let mut rx_im = vec![0.0; n];
    let mut out = Vec::with_capacity(cfg.periods * n);
    for _ in 0..cfg.periods {
        for i in 0..n {
            let w = if np > 0.0 { complex_noise(np, rng) } else { Complex64::new(0.0, 0.0) };
            rx_re[i] = clean_re[i] + w.re;
            rx_im[i] = clean_im[i] + w.im;
        }
        // r[k] = (1/N) Σ_i s[i] y[(i + k) mod N], split to avoid the modulo
        for k in 0..n {
            let re = dot(&pn[..n - k], &rx_re[k..]) + dot(&pn[n - k..], &rx_re[..k]);
            let im = dot(&pn[..n - k], &rx_im[k..]) + dot(&pn[n - k..], &rx_im[..k]);
            out.push(Complex64::new(re * inv_n, im * inv_n));
        }
    }
    Cir::new(out, cfg.periods, n, cfg.delay_step(), 0)
}
