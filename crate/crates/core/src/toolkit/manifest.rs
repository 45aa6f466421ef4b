use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ToolkitError;

pub const MANIFEST_VERSION: u32 = 1;
const BUILTIN_MANIFEST: &str = include_str!("../../config/tools.toml");

/// Which tools are enabled and which executor family backs each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolManifest {
    pub version: u32,
    #[serde(rename = "tool", default)]
    pub tools: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub family: String,
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
}

fn enabled_default() -> bool {
    true
}

impl ManifestEntry {
    pub fn timeout(&self) -> Option<Duration> {
        self.timeout_secs.filter(|s| *s > 0.0).map(Duration::from_secs_f64)
    }
}

impl ToolManifest {
    pub fn parse(text: &str) -> Result<Self, ToolkitError> {
        let m: ToolManifest = toml::from_str(text).map_err(|e| ToolkitError::Manifest(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(ToolkitError::Manifest(format!("unsupported manifest version {}", m.version)));
        }
        for (i, e) in m.tools.iter().enumerate() {
            if m.tools[..i].iter().any(|o| o.name == e.name) {
                return Err(ToolkitError::Manifest(format!("tool `{}` listed twice", e.name)));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ToolkitError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ToolkitError::Manifest(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MANIFEST).expect("builtin manifest parses")
    }

    pub fn enabled(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.tools.iter().filter(|e| e.enabled)
    }
}
