#![allow(dead_code)]

use c2s_core::channel::{SoundingConfig, TrajectoryConfig};
use c2s_core::sounding::DatasetSpec;
use c2s_lab::config::SimulateConfig;

/// 31-bin campaign at 20 MHz sampling: cheap to simulate, and long enough
/// that every N_p up to 32 fits inside the held-out positions.
pub fn small_sim(n_positions: usize) -> SimulateConfig {
    SimulateConfig {
        seed: 1,
        n_positions,
        los_trajectories: 1,
        nlos_trajectories: 1,
        dataset: DatasetSpec {
            n_pairs: 2,
            ..Default::default()
        },
        trajectory: TrajectoryConfig { start_m: 10.0, step_m: 3.0 },
        sounding: SoundingConfig {
            sampling_rate_hz: 20e6,
            bandwidth_hz: 16e6,
            pn_degree: 5,
            n_bins: 31,
            periods: 4,
            ..Default::default()
        },
        channel: Default::default(),
    }
}
