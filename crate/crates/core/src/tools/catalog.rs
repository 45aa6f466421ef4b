use serde::{Deserialize, Serialize};

use crate::toolkit::{ParamSpec, ParamType, ReturnKind, ToolCategory, ToolSignature};

/// Executor families; every tool belongs to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Geocode,
    PointInquiry,
    Forecast,
    RangeAnalysis,
    Satellite,
    Index,
    Change,
    Carbon,
    Search,
    Summarize,
    Species,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Geocode => "geocode",
            Family::PointInquiry => "point_inquiry",
            Family::Forecast => "forecast",
            Family::RangeAnalysis => "range_analysis",
            Family::Satellite => "satellite",
            Family::Index => "index",
            Family::Change => "change",
            Family::Carbon => "carbon",
            Family::Search => "search",
            Family::Summarize => "summarize",
            Family::Species => "species",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub signature: ToolSignature,
    pub family: Family,
}

fn lat() -> ParamSpec {
    ParamSpec::required("lat", ParamType::Real).range(Some(-90.0), Some(90.0))
}

fn lon() -> ParamSpec {
    ParamSpec::required("lon", ParamType::Real).range(Some(-180.0), Some(180.0))
}

fn date(name: &str) -> ParamSpec {
    ParamSpec::required(name, ParamType::Date)
}

fn horizon(name: &str, required: bool) -> ParamSpec {
    let p = if required {
        ParamSpec::required(name, ParamType::Integer)
    } else {
        ParamSpec::optional(name, ParamType::Integer)
    };
    p.range(Some(1.0), None)
}

/// Signatures of the full suite.
type Row = (&'static str, ToolCategory, Vec<ParamSpec>, ReturnKind, Family, &'static str);

pub fn catalog() -> Vec<CatalogEntry> {
    use Family as F;
    use ReturnKind as R;
    use ToolCategory as C;
    let rows: Vec<Row> = vec![
        (
            "get_satellite_image",
            C::RemoteSensing,
            vec![lat(), lon(), date("date")],
            R::Image,
            F::Satellite,
            "Fetch a multispectral image (red, green, nir) for a point and date.",
        ),
        (
            "calculate_ndvi",
            C::RemoteSensing,
            vec![ParamSpec::required("image", ParamType::ImageRef)],
            R::IndexMap,
            F::Index,
            "Vegetation index map and summary statistics for an image.",
        ),
        (
            "calculate_ndwi",
            C::RemoteSensing,
            vec![ParamSpec::required("image", ParamType::ImageRef)],
            R::IndexMap,
            F::Index,
            "Water index map and summary statistics for an image.",
        ),
        (
            "desertification_analysis",
            C::RemoteSensing,
            vec![
                ParamSpec::required("image1", ParamType::ImageRef),
                ParamSpec::required("image2", ParamType::ImageRef),
            ],
            R::ChangeReport,
            F::Change,
            "Vegetation-index change between two images with the share of degraded area.",
        ),
        (
            "detect_bird",
            C::Biodiversity,
            vec![ParamSpec::required("audio_clip", ParamType::AudioRef)],
            R::Candidates,
            F::Species,
            "Candidate bird species for an audio clip, most confident first.",
        ),
        (
            "detect_species",
            C::Biodiversity,
            vec![ParamSpec::required("image", ParamType::ImageRef)],
            R::Candidates,
            F::Species,
            "Candidate plant or animal species for a photo, most confident first.",
        ),
        (
            "online_search",
            C::Web,
            vec![ParamSpec::required("query", ParamType::String)],
            R::SearchResults,
            F::Search,
            "Ranked web results (title, url, snippet) for policy, report and event queries.",
        ),
        (
            "summarize",
            C::Web,
            vec![ParamSpec::required("text", ParamType::String)],
            R::Summary,
            F::Summarize,
            "Short summary of a text that keeps its key facts.",
        ),
        (
            "carbon_footprint_calculation",
            C::Carbon,
            vec![
                ParamSpec::required("country", ParamType::String),
                ParamSpec::required("industry", ParamType::String),
                ParamSpec::required("year", ParamType::Integer).range(Some(1900.0), Some(2100.0)),
                ParamSpec::required("revenue", ParamType::Real).range(Some(0.0), None),
            ],
            R::Emissions,
            F::Carbon,
            "Annual emissions in tCO2e from revenue and a country/industry/year factor.",
        ),
        (
            "aqi_inquiry",
            C::AirQuality,
            vec![lat(), lon(), date("date")],
            R::Readings,
            F::PointInquiry,
            "AQI and pollutant concentrations for a point and date.",
        ),
        (
            "aqi_prediction",
            C::AirQuality,
            vec![lat(), lon(), horizon("horizon", true)],
            R::Series,
            F::Forecast,
            "Daily AQI forecast for the next `horizon` days.",
        ),
        (
            "aqi_analysis",
            C::AirQuality,
            vec![lat(), lon(), date("start"), date("end")],
            R::Analysis,
            F::RangeAnalysis,
            "AQI statistics, trend and exceedance days over a date range.",
        ),
        (
            "pollen_forecast",
            C::AirQuality,
            vec![lat(), lon(), horizon("horizon", false)],
            R::Series,
            F::Forecast,
            "Daily pollen forecast for a point.",
        ),
        (
            "uv_index_forecast",
            C::AirQuality,
            vec![lat(), lon(), horizon("horizon", false)],
            R::Series,
            F::Forecast,
            "Daily UV index forecast for a point.",
        ),
        (
            "weather_inquiry",
            C::WeatherHydrology,
            vec![lat(), lon(), date("date")],
            R::Readings,
            F::PointInquiry,
            "Observed temperature, humidity and wind for a point and date.",
        ),
        (
            "weather_forecast",
            C::WeatherHydrology,
            vec![lat(), lon(), horizon("days", true)],
            R::Series,
            F::Forecast,
            "Daily temperature forecast for the next `days` days.",
        ),
        (
            "weather_analysis",
            C::WeatherHydrology,
            vec![lat(), lon(), date("start"), date("end")],
            R::Analysis,
            F::RangeAnalysis,
            "Temperature statistics, trend and anomalies over a date range.",
        ),
        (
            "rain_inquiry",
            C::WeatherHydrology,
            vec![lat(), lon(), date("date")],
            R::Measurement,
            F::PointInquiry,
            "Precipitation in mm for a point and date.",
        ),
        (
            "rain_prediction",
            C::WeatherHydrology,
            vec![lat(), lon(), horizon("horizon", true)],
            R::Series,
            F::Forecast,
            "Daily precipitation forecast for the next `horizon` days.",
        ),
        (
            "rain_analysis",
            C::WeatherHydrology,
            vec![lat(), lon(), date("start"), date("end")],
            R::Analysis,
            F::RangeAnalysis,
            "Rainfall statistics, trend and heavy-rain days over a date range.",
        ),
        (
            "river_discharge_check",
            C::WeatherHydrology,
            vec![lat(), lon(), date("date")],
            R::Measurement,
            F::PointInquiry,
            "Simulated discharge in m3/s at the nearest river cell on a date.",
        ),
        (
            "geocode_mapping",
            C::Geospatial,
            vec![ParamSpec::required("region", ParamType::String)],
            R::Location,
            F::Geocode,
            "Coordinates, canonical name and country for a Gulf city or region.",
        ),
    ];
    rows.into_iter()
        .map(|(name, cat, params, ret, family, desc)| CatalogEntry {
            signature: ToolSignature::new(name, cat, params, ret, desc).expect("catalog signatures are valid"),
            family,
        })
        .collect()
}

pub fn family_of(tool: &str) -> Option<Family> {
    catalog().into_iter().find(|e| e.signature.name == tool).map(|e| e.family)
}
