use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Record of one artifact-producing run, written beside its main output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &impl Serialize) -> Self {
        Self {
            subcommand: subcommand.into(),
            config: serde_json::to_value(config).expect("configs serialize to JSON"),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_s: 0.0,
        }
    }

    /// Writes `<main_output>.manifest.json` and returns its path.
    pub fn write_beside(&mut self, main_output: &Path, elapsed: Duration) -> Result<PathBuf> {
        self.wall_clock_s = elapsed.as_secs_f64();
        let path = manifest_path(main_output);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

pub fn manifest_path(main_output: &Path) -> PathBuf {
    let mut s = main_output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
