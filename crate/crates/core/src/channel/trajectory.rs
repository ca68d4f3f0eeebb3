use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cir::SoundingConfig;
use super::paths::{sample_channel, ChannelStats, Path, PathSet, Scenario};
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub start_m: f64,
    pub step_m: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            start_m: 10.0,
            step_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub position: u32,
    pub distance_m: f64,
    pub paths: PathSet,
}

/// Receiver positions moving away from the transmitter in fixed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub start_m: f64,
    pub step_m: f64,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of distinct path identities (the largest id plus one).
    pub fn path_ids(&self) -> usize {
        self.points
            .iter()
            .flat_map(|p| p.paths.paths().iter().map(|q| q.id as usize + 1))
            .max()
            .unwrap_or(0)
    }
}

/// Builds a trajectory of `n_positions` placements at `start + k·step`.
///
/// The direct path follows the geometry exactly; scatterer excess delays
/// random-walk with increments bounded by `stats.delay_drift_s`, amplitudes
/// follow the path loss with a bounded log-amplitude drift, and every phase
/// rotates with the carrier as the delay changes.
pub fn make_trajectory<R: Rng + ?Sized>(
    scenario: Scenario,
    n_positions: usize,
    traj: &TrajectoryConfig,
    stats: &ChannelStats,
    cfg: &SoundingConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    if n_positions == 0 {
        return Err(Error::Config("n_positions must be >= 1".into()));
    }
    if !(traj.start_m > 0.0 && traj.step_m > 0.0) {
        return Err(Error::Config("trajectory start and step must be positive".into()));
    }
    let grid = cfg.delay_extent();
    let first = sample_channel(scenario, traj.start_m, stats, cfg, rng)?;
    let mut points = Vec::with_capacity(n_positions);
    // per-path state: excess delay, amplitude relative to path loss, phase
    let d0 = traj.start_m;
    let mut state: Vec<(Path, f64, f64)> = first
        .paths()
        .iter()
        .map(|p| {
            let excess = p.delay_s - d0 / SPEED_OF_LIGHT;
            let rel_amp = p.gain.norm() / libm::sqrt(stats.reference_power(d0));
            (*p, excess, rel_amp)
        })
        .collect();
    points.push(TrajectoryPoint {
        position: 0,
        distance_m: d0,
        paths: first,
    });
    for k in 1..n_positions {
        let d = traj.start_m + k as f64 * traj.step_m;
        let direct = d / SPEED_OF_LIGHT;
        if direct >= grid {
            return Err(Error::DelayOutOfGrid {
                delay_s: direct,
                grid_s: grid,
            });
        }
        let amp_ref = libm::sqrt(stats.reference_power(d));
        let mut paths = Vec::with_capacity(state.len());
        for (path, excess, rel_amp) in state.iter_mut() {
            if !path.is_los {
                let step: f64 = rng.gen_range(-1.0..=1.0) * stats.delay_drift_s;
                *excess = (*excess + step).max(0.0).min(grid - direct - cfg.delay_step());
                *rel_amp *= libm::exp(rng.gen_range(-1.0..=1.0) * stats.gain_drift);
            }
            let delay = direct + *excess;
            let phase = path.gain.arg() - 2.0 * PI * cfg.carrier_hz * (delay - path.delay_s);
            path.delay_s = delay;
            path.gain = Complex64::from_polar(*rel_amp * amp_ref, phase);
            paths.push(*path);
        }
        points.push(TrajectoryPoint {
            position: k as u32,
            distance_m: d,
            paths: PathSet::new(paths, cfg.carrier_hz, grid)?,
        });
    }
    Ok(Trajectory {
        scenario,
        start_m: traj.start_m,
        step_m: traj.step_m,
        points,
    })
}
