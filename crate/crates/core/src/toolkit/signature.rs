use std::fmt;

use serde::{Deserialize, Serialize};

use super::ToolkitError;

/// Tool categories in prompt order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolCategory {
    RemoteSensing,
    Biodiversity,
    Web,
    Carbon,
    AirQuality,
    WeatherHydrology,
    Geospatial,
}

impl ToolCategory {
    pub const ALL: [ToolCategory; 7] = [
        ToolCategory::RemoteSensing,
        ToolCategory::Biodiversity,
        ToolCategory::Web,
        ToolCategory::Carbon,
        ToolCategory::AirQuality,
        ToolCategory::WeatherHydrology,
        ToolCategory::Geospatial,
    ];

    pub fn title(&self) -> &'static str {
        match self {
            ToolCategory::RemoteSensing => "Remote sensing and land surface",
            ToolCategory::Biodiversity => "Biodiversity and species",
            ToolCategory::Web => "Web retrieval and summarization",
            ToolCategory::Carbon => "Carbon and sustainability",
            ToolCategory::AirQuality => "Air quality and health indices",
            ToolCategory::WeatherHydrology => "Weather, rainfall, and hydrology",
            ToolCategory::Geospatial => "Geospatial utility",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ToolCategory::RemoteSensing => "remote_sensing",
            ToolCategory::Biodiversity => "biodiversity",
            ToolCategory::Web => "web",
            ToolCategory::Carbon => "carbon",
            ToolCategory::AirQuality => "air_quality",
            ToolCategory::WeatherHydrology => "weather_hydrology",
            ToolCategory::Geospatial => "geospatial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    Real,
    Integer,
    String,
    Date,
    Geopoint,
    ImageRef,
    AudioRef,
    SeriesRef,
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamType::Real => "real",
            ParamType::Integer => "integer",
            ParamType::String => "string",
            ParamType::Date => "date",
            ParamType::Geopoint => "geopoint",
            ParamType::ImageRef => "image_ref",
            ParamType::AudioRef => "audio_ref",
            ParamType::SeriesRef => "series_ref",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub required: bool,
    /// Inclusive numeric bounds, checked after coercion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl ParamSpec {
    pub fn required(name: &str, ty: ParamType) -> Self {
        Self { name: name.to_string(), ty, required: true, min: None, max: None }
    }

    pub fn optional(name: &str, ty: ParamType) -> Self {
        Self { name: name.to_string(), ty, required: false, min: None, max: None }
    }

    pub fn range(mut self, min: Option<f64>, max: Option<f64>) -> Self {
        self.min = min;
        self.max = max;
        self
    }
}

/// What a tool returns; matched against the payload variant on every call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    Location,
    Measurement,
    Readings,
    Series,
    Analysis,
    Image,
    IndexMap,
    ChangeReport,
    Emissions,
    SearchResults,
    Summary,
    Candidates,
}

impl fmt::Display for ReturnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializable");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSignature {
    pub name: String,
    pub category: ToolCategory,
    pub params: Vec<ParamSpec>,
    pub returns: ReturnKind,
    pub description: String,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl ToolSignature {
    pub fn new(
        name: &str,
        category: ToolCategory,
        params: Vec<ParamSpec>,
        returns: ReturnKind,
        description: &str,
    ) -> Result<Self, ToolkitError> {
        if !is_identifier(name) {
            return Err(ToolkitError::InvalidSignature(format!("`{name}` is not an identifier")));
        }
        for (i, p) in params.iter().enumerate() {
            if !is_identifier(&p.name) {
                return Err(ToolkitError::InvalidSignature(format!(
                    "{name}: parameter `{}` is not an identifier",
                    p.name
                )));
            }
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(ToolkitError::InvalidSignature(format!("{name}: duplicate parameter `{}`", p.name)));
            }
        }
        Ok(Self { name: name.to_string(), category, params, returns, description: description.to_string() })
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn required_params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| p.required)
    }
}
