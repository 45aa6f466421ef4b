//! The climate tool suite: 22 tools grouped into executor families, backed
//! by a [`ClimateProvider`] (offline fixtures or live HTTP services).

mod analysis;
mod carbon;
mod catalog;
mod executors;
mod fixture;
mod live;
mod raster;

use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use analysis::{analyze_range, AnalysisConfig, RangeExtras};
pub use carbon::EmissionFactorTable;
pub use catalog::{catalog, family_of, CatalogEntry, Family};
pub use executors::build_registry;
pub use fixture::{FixtureProvider, FixtureSearch, ProviderConfig};
pub use live::{LiveEndpoints, LiveProvider, LiveSearch};
pub use raster::{desertification, ndvi, ndwi, normalized_difference, ImageRef, RasterImage};

use crate::canon::{GeoPoint, UnitTable};
use crate::geoforge::CityMatch;
use crate::llm::LlmBackend;
use crate::toolkit::{Candidate, Measurement, SearchHit, ToolFailure};

#[derive(Debug, thiserror::Error)]
pub enum ToolsError {
    #[error("{path}: {message}")]
    Fixture { path: String, message: String },
    #[error("tool `{tool}` is mapped to family {manifest} but implements {actual}")]
    FamilyMismatch { tool: String, manifest: String, actual: String },
    #[error("manifest names unknown tool `{0}`")]
    UnknownTool(String),
    #[error(transparent)]
    Registry(#[from] crate::toolkit::ToolkitError),
    #[error("live provider: {0}")]
    Live(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Fixture,
    LiveHttp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationFamily {
    Weather,
    Rain,
    Aqi,
}

impl StationFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            StationFamily::Weather => "weather",
            StationFamily::Rain => "rain",
            StationFamily::Aqi => "aqi",
        }
    }
}

/// One daily value at a station, in the provider's own unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRow {
    pub date: NaiveDate,
    pub variable: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationData {
    pub station: GeoPoint,
    /// Sorted by (date, variable).
    pub rows: Vec<StationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastData {
    pub first_day: NaiveDate,
    pub station: GeoPoint,
    pub variable: String,
    pub unit: String,
    /// One value per day starting at `first_day`.
    pub values: Vec<f64>,
}

/// Source of climate data for the tool executors.
pub trait ClimateProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    /// Daily rows for `family` at the station nearest `point`, `start..=end`.
    fn station_rows(
        &self,
        family: StationFamily,
        point: GeoPoint,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<StationData, ToolFailure>;

    /// `horizon` daily values of `variable` starting tomorrow.
    fn forecast(&self, variable: &str, point: GeoPoint, horizon: u32) -> Result<ForecastData, ToolFailure>;

    fn discharge(&self, point: GeoPoint, date: NaiveDate) -> Result<Measurement, ToolFailure>;

    fn image(&self, point: GeoPoint, date: NaiveDate) -> Result<RasterImage, ToolFailure>;

    fn species(&self, reference: &str) -> Result<Vec<Candidate>, ToolFailure>;

    fn geocode(&self, region: &str) -> Result<CityMatch, ToolFailure>;

    fn emission_factor(&self, country: &str, industry: &str, year: i64) -> Result<f64, ToolFailure>;
}

pub trait SearchProvider: Send + Sync {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, ToolFailure>;

    fn fetch(&self, url: &str) -> Result<Vec<u8>, ToolFailure>;
}

/// Everything the executors need.
#[derive(Clone)]
pub struct ToolContext {
    pub provider: Arc<dyn ClimateProvider>,
    pub search: Arc<dyn SearchProvider>,
    pub backend: Arc<dyn LlmBackend>,
    pub config: AnalysisConfig,
    pub units: Arc<UnitTable>,
}
