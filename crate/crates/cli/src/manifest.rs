use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::config::{LoadedConfig, ProviderMode};

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub backend: String,
    pub provider_mode: String,
    pub created: DateTime<Utc>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &LoadedConfig, backend: &str, created: DateTime<Utc>) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: cfg.path.display().to_string(),
            config_sha256: cfg.sha256.clone(),
            seed: cfg.config.seed,
            backend: backend.to_string(),
            provider_mode: match cfg.config.provider.mode {
                ProviderMode::Live => "live",
                ProviderMode::Fixture => "fixture",
            }
            .to_string(),
            created,
            outputs: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
