//! Optional file-based configuration for the CLI. Precedence is always
//! CLI flag over config file over built-in default.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub voxel: VoxelSection,
    pub abstraction: AbstractionSection,
    pub curation: CurationSection,
    pub metrics: MetricsSection,
    pub sampling: SamplingSection,
    pub render: RenderSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct VoxelSection {
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct AbstractionSection {
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub scale_s: Option<f64>,
    pub use_dynamic: Option<bool>,
    pub tau_static: Option<f64>,
    pub max_segments_k: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct CurationSection {
    pub eta: Option<f64>,
    pub clip_norm: Option<f64>,
    pub max_iters: Option<usize>,
    pub epsilon_stop: Option<f64>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct MetricsSection {
    pub nirate_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct SamplingSection {
    pub k_candidates: Option<usize>,
    pub t_threshold: Option<f64>,
    pub rounds: Option<usize>,
    pub min_accepted: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct RenderSection {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub background: Option<String>,
}

impl FileConfig {
    /// Load TOML or JSON, decided by the file extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            Some("toml") | None => {
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
            }
            Some(other) => Err(Error::Config(format!(
                "unsupported config extension `.{other}` (use .toml or .json)"
            ))),
        }
    }
}
