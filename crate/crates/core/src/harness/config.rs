use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::WorldConfig;
use crate::error::{Error, Result};
use crate::federation::AggConfig;
use crate::maddpg::{NetworkConfig, TrainConfig};

/// How learning curves are summarized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Episodes per smoothing block.
    pub smoothing_window: usize,
    /// Share of the plateau a block must reach to count as converged.
    pub convergence_fraction: f64,
    /// Share of trailing blocks that defines the plateau.
    pub tail_fraction: f64,
    /// Write elapsed seconds into metrics.csv. Off by default so that output
    /// files depend only on configuration and seed.
    pub record_wallclock: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            smoothing_window: 10,
            convergence_fraction: 0.9,
            tail_fraction: 0.1,
            record_wallclock: false,
        }
    }
}

impl ReportConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 {
            return Err(Error::config("report.smoothing_window", "must be at least 1"));
        }
        if !(self.convergence_fraction > 0.0 && self.convergence_fraction <= 1.0) {
            return Err(Error::config("report.convergence_fraction", "must lie in (0, 1]"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config("report.tail_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub episodes: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Save a checkpoint every this many episodes; the final episode is
    /// always saved. Zero keeps only the final one.
    pub checkpoint_every: usize,
    pub world: WorldConfig,
    pub train: TrainConfig,
    pub federation: AggConfig,
    pub network: NetworkConfig,
    pub report: ReportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            episodes: 1000,
            seed: 0,
            output_dir: None,
            checkpoint_every: 0,
            world: WorldConfig::default(),
            train: TrainConfig::default(),
            federation: AggConfig::default(),
            network: NetworkConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("paper-30users", include_str!("../../presets/paper-30users.toml")),
    ("paper-45users", include_str!("../../presets/paper-45users.toml")),
    ("desk-small", include_str!("../../presets/desk-small.toml")),
];

/// `run.json` contents: the fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        self.world.validate()?;
        self.train.validate()?;
        self.network.validate()?;
        self.federation.validate(self.world.n_uavs)?;
        self.report.validate()
    }

    /// Parses TOML text, filling omitted keys with defaults and rejecting
    /// unknown ones, then validates.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::config("preset", format!("unknown preset `{name}`")))?;
        Self::from_toml_str(text).map_err(|message| Error::Parse {
            path: PathBuf::from(format!("<preset {name}>")),
            message,
        })
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            format_version: 1,
            config: self.clone(),
        }
    }
}

/// Loads an experiment configuration. `.json` files are read as `run.json`
/// manifests, anything else as TOML.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        manifest.config.validate()?;
        Ok(manifest.config)
    } else {
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
