//! TOML run configurations. Every field has a default, so an empty file is
//! a valid configuration.

use std::fs;
use std::path::Path;

use c2s_core::channel::{make_trajectory, ChannelStats, Scenario, SoundingConfig, Trajectory, TrajectoryConfig};
use c2s_core::model::ModelConfig;
use c2s_core::sounding::{build_dataset, Dataset, DatasetSpec, Provenance};
use c2s_core::train::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Synthetic measurement campaign: trajectories per scenario, antenna pairs
/// and sounding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub n_positions: usize,
    pub los_trajectories: usize,
    pub nlos_trajectories: usize,
    pub dataset: DatasetSpec,
    pub trajectory: TrajectoryConfig,
    pub sounding: SoundingConfig,
    pub channel: ChannelStats,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_positions: 120,
            los_trajectories: 2,
            nlos_trajectories: 2,
            dataset: DatasetSpec {
                n_pairs: 35,
                ..DatasetSpec::default()
            },
            trajectory: TrajectoryConfig::default(),
            sounding: SoundingConfig::default(),
            channel: ChannelStats::default(),
        }
    }
}

impl SimulateConfig {
    pub fn trajectories(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Trajectory>> {
        let scenarios = std::iter::repeat_n(Scenario::Los, self.los_trajectories)
            .chain(std::iter::repeat_n(Scenario::Nlos, self.nlos_trajectories));
        let mut out = Vec::new();
        for s in scenarios {
            out.push(make_trajectory(s, self.n_positions, &self.trajectory, &self.channel, &self.sounding, rng)?);
        }
        Ok(out)
    }

    /// Generates the dataset; identical configs give identical datasets.
    pub fn build(&self) -> Result<Dataset> {
        if self.los_trajectories + self.nlos_trajectories == 0 {
            return Err(c2s_core::Error::Config("need at least one trajectory".into()).into());
        }
        if self.n_positions < self.dataset.n_p {
            return Err(c2s_core::Error::TrajectoryTooShort {
                len: self.n_positions,
                n_p: self.dataset.n_p,
            }
            .into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let trajs = self.trajectories(&mut rng)?;
        let provenance = Provenance {
            seed: self.seed,
            generator: format!("c2s-lab {} simulate", env!("CARGO_PKG_VERSION")),
        };
        Ok(build_dataset(&trajs, &self.sounding, &self.dataset, provenance, &mut rng)?)
    }
}

/// Model shape plus training protocol.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    toml::from_str(&text).map_err(|e| LabError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("configs serialize to TOML")
}
