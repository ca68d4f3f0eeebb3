use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::cir::SoundingConfig;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Los,
    Nlos,
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub delay_s: f64,
    pub gain: Complex64,
    pub is_los: bool,
    /// Stable identity of the scatterer along a trajectory.
    pub id: u32,
}

impl Path {
    pub fn power(&self) -> f64 {
        self.gain.norm_sqr()
    }
}

/// Multipath geometry of one Tx/Rx placement, sorted by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
    pub carrier_hz: f64,
    /// Exclusive upper bound on path delays (the delay grid extent).
    pub max_delay_s: f64,
}

impl PathSet {
    /// Validates and sorts `paths`.
    pub fn new(mut paths: Vec<Path>, carrier_hz: f64, max_delay_s: f64) -> Result<Self> {
        for p in &paths {
            if !(p.delay_s >= 0.0) || p.delay_s >= max_delay_s {
                return Err(Error::DelayOutOfGrid {
                    delay_s: p.delay_s,
                    grid_s: max_delay_s,
                });
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(Error::NonFinite("path gain"));
            }
        }
        if paths.iter().filter(|p| p.is_los).count() > 1 {
            return Err(Error::Config("more than one line-of-sight path".into()));
        }
        paths.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
        Ok(Self {
            paths,
            carrier_hz,
            max_delay_s,
        })
    }

    pub fn empty(carrier_hz: f64, max_delay_s: f64) -> Self {
        Self {
            paths: Vec::new(),
            carrier_hz,
            max_delay_s,
        }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn los(&self) -> Option<&Path> {
        self.paths.iter().find(|p| p.is_los)
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(Path::power).sum()
    }

    /// Copy with every path gain rotated by `offsets[id]` radians.
    pub fn with_phase_offsets(&self, offsets: &[f64]) -> Self {
        let paths = self
            .paths
            .iter()
            .map(|p| Path {
                gain: p.gain * Complex64::from_polar(1.0, offsets[p.id as usize % offsets.len()]),
                ..*p
            })
            .collect();
        Self {
            paths,
            carrier_hz: self.carrier_hz,
            max_delay_s: self.max_delay_s,
        }
    }
}

/// Simulator statistics for [`sample_channel`]. These are modelling choices,
/// not measured values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelStats {
    pub min_paths: usize,
    pub max_paths: usize,
    /// Mean of the exponentially distributed scatterer excess delay.
    pub excess_delay_mean_s: f64,
    /// Decay constant of the mean scatterer power versus excess delay.
    pub power_decay_s: f64,
    /// Mean scatterer power at zero excess delay relative to the direct path.
    pub scatter_power_db: f64,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    /// Bound on the per-step excess-delay drift along a trajectory.
    pub delay_drift_s: f64,
    /// Bound on the per-step log-amplitude drift along a trajectory.
    pub gain_drift: f64,
}

impl Default for ChannelStats {
    fn default() -> Self {
        Self {
            min_paths: 2,
            max_paths: 8,
            excess_delay_mean_s: 60e-9,
            power_decay_s: 80e-9,
            scatter_power_db: -6.0,
            path_loss_exponent: 2.0,
            reference_distance_m: 1.0,
            delay_drift_s: 1e-9,
            gain_drift: 0.05,
        }
    }
}

impl ChannelStats {
    pub fn validate(&self) -> Result<()> {
        if self.min_paths < 1 || self.min_paths > self.max_paths {
            return Err(Error::Config("need 1 <= min_paths <= max_paths".into()));
        }
        if !(self.excess_delay_mean_s > 0.0 && self.power_decay_s > 0.0) {
            return Err(Error::Config("delay statistics must be positive".into()));
        }
        if !(self.reference_distance_m > 0.0) || !(self.delay_drift_s >= 0.0) || !(self.gain_drift >= 0.0) {
            return Err(Error::Config("invalid path-loss or drift parameters".into()));
        }
        Ok(())
    }

    /// Mean direct-path power at `distance_m`.
    pub fn reference_power(&self, distance_m: f64) -> f64 {
        libm::pow(self.reference_distance_m / distance_m, self.path_loss_exponent)
    }

    /// Mean scatterer power at `excess_s` relative to the direct path.
    pub fn scatter_profile(&self, excess_s: f64) -> f64 {
        libm::pow(10.0, self.scatter_power_db / 10.0) * libm::exp(-excess_s / self.power_decay_s)
    }
}

pub(crate) fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>() * 2.0 * PI - PI
}

pub(crate) fn rayleigh<R: Rng + ?Sized>(mean_power: f64, rng: &mut R) -> Complex64 {
    let s = libm::sqrt(mean_power / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws a random multipath channel at `distance_m`.
///
/// LoS channels contain a direct path at `distance_m / c` with the path-loss
/// power and a uniform phase. Scatterers arrive after the direct delay with
/// exponentially distributed excess delays and Rayleigh gains whose mean
/// power decays exponentially with excess delay. The total path count is
/// uniform in `[min_paths, max_paths]`.
pub fn sample_channel<R: Rng + ?Sized>(
    scenario: Scenario,
    distance_m: f64,
    stats: &ChannelStats,
    cfg: &SoundingConfig,
    rng: &mut R,
) -> Result<PathSet> {
    stats.validate()?;
    if !(distance_m > 0.0) {
        return Err(Error::Config("distance must be positive".into()));
    }
    let grid = cfg.delay_extent();
    let direct = distance_m / SPEED_OF_LIGHT;
    if direct >= grid {
        return Err(Error::DelayOutOfGrid {
            delay_s: direct,
            grid_s: grid,
        });
    }
    let p_ref = stats.reference_power(distance_m);
    let k = rng.gen_range(stats.min_paths..=stats.max_paths);
    let mut paths = Vec::with_capacity(k);
    let n_scatter = match scenario {
        Scenario::Los => {
            paths.push(Path {
                delay_s: direct,
                gain: Complex64::from_polar(libm::sqrt(p_ref), uniform_phase(rng)),
                is_los: true,
                id: 0,
            });
            k - 1
        }
        Scenario::Nlos => k,
    };
    let excess = Exp::new(1.0 / stats.excess_delay_mean_s).expect("positive rate");
    while paths.len() < k {
        let tau: f64 = excess.sample(rng);
        if direct + tau >= grid {
            // truncated to the grid; redraw
            continue;
        }
        let mean = p_ref * stats.scatter_profile(tau);
        paths.push(Path {
            delay_s: direct + tau,
            gain: rayleigh(mean, rng),
            is_los: false,
            id: paths.len() as u32,
        });
    }
    debug_assert_eq!(paths.len(), n_scatter + usize::from(scenario == Scenario::Los));
    PathSet::new(paths, cfg.carrier_hz, grid)
}
