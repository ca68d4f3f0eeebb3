//! Synthetic multipath channels and PN spread-spectrum channel sounding.

mod cir;
mod paths;
mod pn;
mod trajectory;

pub use cir::{noise_power, sound_cir, sound_cir_with, synth_cir, synth_taps, Cir, SoundingConfig};
pub(crate) use paths::uniform_phase;
pub use paths::{sample_channel, ChannelStats, Path, PathSet, Scenario};
pub use pn::{circular_autocorrelation, default_taps, generate_pn_sequence};
pub use trajectory::{make_trajectory, Trajectory, TrajectoryConfig, TrajectoryPoint};
