use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use transcreate_core::gateway::ProviderConfig;

/// Run-wide settings read from `--config`; flags override each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub provider: ProviderConfig,
    pub taxonomy_path: Option<PathBuf>,
    pub tagset_path: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub rng_seed: u64,
    pub retry_budget: u32,
    pub length_envelope: f64,
    pub alpha: f64,
    pub mock_script_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            provider: ProviderConfig::default(),
            taxonomy_path: None,
            tagset_path: None,
            prompts_dir: None,
            rng_seed: 0,
            retry_budget: 3,
            length_envelope: 0.25,
            alpha: 0.01,
            mock_script_path: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.length_envelope > 0.0 && self.length_envelope < 1.0) {
            bail!("length_envelope must be in (0, 1), got {}", self.length_envelope);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must be in (0, 1), got {}", self.alpha);
        }
        self.provider.validate().map_err(anyhow::Error::msg)
    }
}
