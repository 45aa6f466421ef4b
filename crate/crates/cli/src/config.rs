use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use gulfclim::clock::{Clock, FixedClock, SystemClock};
use gulfclim::geoforge::VisualConfig;
use gulfclim::llm::{LlmBackend, RemoteBackend, ScriptedBackend};
use gulfclim::textforge::TextForgeConfig;
use gulfclim::toolkit::{ToolManifest, ToolRegistry};
use gulfclim::tools::{
    build_registry, AnalysisConfig, ClimateProvider, EmissionFactorTable, FixtureProvider, FixtureSearch,
    LiveEndpoints, LiveProvider, LiveSearch, SearchProvider, ToolContext,
};
use gulfclim::UnitTable;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Replays recorded emissions from a JSON file.
    Replay { replay: PathBuf },
    /// OpenAI-compatible chat endpoint. The key is read from `api_key_env`.
    Remote {
        endpoint: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub mode: ProviderMode,
    #[serde(default)]
    pub fixture_root: Option<PathBuf>,
    #[serde(default)]
    pub endpoints: LiveEndpoints,
    /// SearXNG instance for live web search.
    #[serde(default)]
    pub search_endpoint: Option<String>,
    #[serde(default)]
    pub emission_factors: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub budget: usize,
    pub observation_cap: usize,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self { budget: gulfclim::agent::DEFAULT_BUDGET, observation_cap: gulfclim::agent::DEFAULT_OBSERVATION_CAP }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct VisualSection {
    /// Gridded product file.
    pub product: Option<PathBuf>,
    #[serde(flatten)]
    pub forge: VisualConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    pub backend: BackendConfig,
    pub provider: ProviderSection,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Pins "now" for reproducible provenance timestamps.
    #[serde(default)]
    pub clock: Option<DateTime<Utc>>,
    #[serde(default)]
    pub agent: AgentSection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub text: TextForgeConfig,
    #[serde(default)]
    pub visual: VisualSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A parsed config plus where it came from.
pub struct LoadedConfig {
    pub path: PathBuf,
    pub sha256: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.manifest.as_mut() {
            abs(p);
        }
        if let BackendConfig::Replay { replay } = &mut config.backend {
            abs(replay);
        }
        if let Some(p) = config.provider.fixture_root.as_mut() {
            abs(p);
        }
        if let Some(p) = config.provider.emission_factors.as_mut() {
            abs(p);
        }
        if let Some(p) = config.visual.product.as_mut() {
            abs(p);
        }
        abs(&mut config.output_dir);
        if config.agent.budget == 0 {
            bail!("agent.budget must be at least 1");
        }
        if config.provider.mode == ProviderMode::Fixture && config.provider.fixture_root.is_none() {
            bail!("provider.mode = \"fixture\" needs provider.fixture_root");
        }
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Self { path: path.to_path_buf(), sha256, config })
    }

    pub fn backend(&self) -> Result<Arc<dyn LlmBackend>> {
        Ok(match &self.config.backend {
            BackendConfig::Replay { replay } => Arc::new(ScriptedBackend::load(replay)?),
            BackendConfig::Remote { endpoint, model, api_key_env, timeout_secs } => Arc::new(RemoteBackend::new(
                endpoint.clone(),
                model.clone(),
                api_key_env.as_deref(),
                Duration::from_secs(*timeout_secs),
            )?),
        })
    }

    pub fn clock(&self) -> Box<dyn Clock> {
        match self.config.clock {
            Some(t) => Box::new(FixedClock(t)),
            None => Box::new(SystemClock),
        }
    }

    pub fn search(&self) -> Result<Arc<dyn SearchProvider>> {
        let p = &self.config.provider;
        Ok(match p.mode {
            ProviderMode::Fixture => {
                Arc::new(FixtureSearch::load(p.fixture_root.as_deref().expect("checked on load"))?)
            }
            ProviderMode::Live => {
                let endpoint = p.search_endpoint.clone().context("live mode needs provider.search_endpoint")?;
                Arc::new(LiveSearch::new(endpoint, Duration::from_secs(p.timeout_secs))?)
            }
        })
    }

    fn provider(&self) -> Result<Arc<dyn ClimateProvider>> {
        let p = &self.config.provider;
        Ok(match p.mode {
            ProviderMode::Fixture => {
                Arc::new(FixtureProvider::load(p.fixture_root.as_deref().expect("checked on load"))?)
            }
            ProviderMode::Live => {
                let factors = match &p.emission_factors {
                    Some(path) => {
                        let text =
                            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                        EmissionFactorTable::from_csv(&text).map_err(anyhow::Error::msg)?
                    }
                    None => EmissionFactorTable::default(),
                };
                Arc::new(LiveProvider::new(p.endpoints.clone(), factors, Duration::from_secs(p.timeout_secs))?)
            }
        })
    }

    pub fn tool_manifest(&self) -> Result<ToolManifest> {
        Ok(match &self.config.manifest {
            Some(path) => ToolManifest::load(path)?,
            None => ToolManifest::builtin(),
        })
    }

    pub fn registry(&self, backend: Arc<dyn LlmBackend>) -> Result<ToolRegistry> {
        let ctx = ToolContext {
            provider: self.provider()?,
            search: self.search()?,
            backend,
            config: self.config.analysis,
            units: Arc::new(UnitTable::builtin().clone()),
        };
        Ok(build_registry(&self.tool_manifest()?, &ctx)?)
    }
}
