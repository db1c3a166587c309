//! TOML run configuration. Every section and key is optional.
//!
//! ```toml
//! [svr]
//! c = 2.0
//! [stream]
//! window = 30.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gazenotice_core::features::FeatureConfig;
use gazenotice_core::learn::{SvcParams, SvrParams};
use gazenotice_core::redirect::{HdbscanParams, MotionParams, RedirectionPolicy};

use crate::error::{Error, Result};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "GAZENOTICE_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    /// Sliding window length, seconds.
    pub window: f64,
    /// Emission period, seconds.
    pub hop: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig { window: 60.0, hop: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub features: FeatureConfig,
    pub svr: SvrParams,
    pub svc: SvcParams,
    pub hdbscan: HdbscanParams,
    pub motion: MotionParams,
    pub policy: RedirectionPolicy,
    pub stream: StreamConfig,
}

impl Config {
    pub fn from_toml(path: &Path, text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(path, line, e.message())
        })?;
        config.validate(path)?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Config::from_toml(path, &text)
    }

    /// Explicit path, else the environment variable, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => Config::read(&p),
            None => Ok(Config::default()),
        }
    }

    fn validate(&self, path: &Path) -> Result<()> {
        self.policy.validate().map_err(|e| Error::schema(path, format!("[policy] {e}")))?;
        if !(self.stream.window > 0.0 && self.stream.hop > 0.0) {
            return Err(Error::schema(path, "[stream] window and hop must be positive"));
        }
        if !(self.svr.c > 0.0 && self.svr.epsilon >= 0.0 && self.svc.c > 0.0) {
            return Err(Error::schema(path, "[svr]/[svc] c must be positive and epsilon non-negative"));
        }
        if self.hdbscan.min_cluster_size < 2 || self.hdbscan.min_samples < 1 {
            return Err(Error::schema(path, "[hdbscan] min_cluster_size must be >= 2 and min_samples >= 1"));
        }
        Ok(())
    }
}
