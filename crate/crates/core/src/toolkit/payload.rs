//! Typed tool outputs and the observation envelope.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ReturnKind;
use crate::canon::{CanonError, GeoPoint, UnitTable};
use crate::stats::SummaryStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub variable: String,
    pub value: f64,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readings {
    pub timestamp: DateTime<Utc>,
    pub location: GeoPoint,
    /// Sorted by variable name.
    pub values: Vec<Measurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub timestamp: DateTime<Utc>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPayload {
    pub variable: String,
    pub unit: String,
    pub location: GeoPoint,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendDirection {
    Increasing,
    Decreasing,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope_per_day: f64,
    pub direction: TrendDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHits {
    pub threshold: f64,
    pub points: Vec<FlaggedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub variable: String,
    pub unit: String,
    pub location: GeoPoint,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub stats: SummaryStats,
    pub trend: Trend,
    pub anomalies: Vec<FlaggedPoint>,
    /// AQI exceedances above the configured threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exceedances: Option<ThresholdHits>,
    /// Heavy-rain days above the configured threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<ThresholdHits>,
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageHandle {
    pub image_ref: String,
    pub width: usize,
    pub height: usize,
    pub bands: Vec<String>,
    pub acquired: DateTime<Utc>,
    pub location: GeoPoint,
    pub pixel_size_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Ndvi,
    Ndwi,
}

impl IndexKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IndexKind::Ndvi => "ndvi",
            IndexKind::Ndwi => "ndwi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub valid_fraction: f64,
}

/// Per-pixel index values; `None` marks an invalid (zero-denominator) pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMap {
    pub index_name: IndexKind,
    pub width: usize,
    pub height: usize,
    pub values: Vec<Vec<Option<f64>>>,
    pub stats: IndexStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub width: usize,
    pub height: usize,
    pub delta_map: Vec<Vec<Option<f64>>>,
    pub mean_ndvi_delta: f64,
    pub degraded_area_fraction: f64,
    pub degradation_threshold: f64,
    pub valid_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emissions {
    pub country: String,
    pub industry: String,
    pub year: i64,
    pub revenue: f64,
    pub factor: f64,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub title: String,
    pub url: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub species: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Location { point: GeoPoint, name: String, country: String },
    Measurement(Measurement),
    Readings(Readings),
    Series(SeriesPayload),
    Analysis(AnalysisReport),
    Image(ImageHandle),
    IndexMap(IndexMap),
    ChangeReport(ChangeReport),
    Emissions(Emissions),
    SearchResults { results: Vec<SearchHit> },
    Summary { text: String },
    Candidates { candidates: Vec<Candidate> },
}

impl Payload {
    pub fn kind(&self) -> ReturnKind {
        match self {
            Payload::Location { .. } => ReturnKind::Location,
            Payload::Measurement(_) => ReturnKind::Measurement,
            Payload::Readings(_) => ReturnKind::Readings,
            Payload::Series(_) => ReturnKind::Series,
            Payload::Analysis(_) => ReturnKind::Analysis,
            Payload::Image(_) => ReturnKind::Image,
            Payload::IndexMap(_) => ReturnKind::IndexMap,
            Payload::ChangeReport(_) => ReturnKind::ChangeReport,
            Payload::Emissions(_) => ReturnKind::Emissions,
            Payload::SearchResults { .. } => ReturnKind::SearchResults,
            Payload::Summary { .. } => ReturnKind::Summary,
            Payload::Candidates { .. } => ReturnKind::Candidates,
        }
    }

    /// Rewrites every physical quantity into its canonical unit.
    pub fn normalize(self, units: &UnitTable) -> Result<Payload, CanonError> {
        Ok(match self {
            Payload::Measurement(m) => Payload::Measurement(normalize_measurement(m, units)?),
            Payload::Readings(mut r) => {
                r.values = r.values.into_iter().map(|m| normalize_measurement(m, units)).collect::<Result<_, _>>()?;
                r.values.sort_by(|a, b| a.variable.cmp(&b.variable));
                Payload::Readings(r)
            }
            Payload::Series(mut s) => {
                let (_, canonical) = units.normalize(0.0, &s.unit, &s.variable)?;
                let canonical = canonical.to_string();
                for p in &mut s.points {
                    if let Some(v) = p.value {
                        p.value = Some(units.normalize(v, &s.unit, &s.variable)?.0);
                    }
                }
                s.unit = canonical;
                Payload::Series(s)
            }
            Payload::Analysis(a) => Payload::Analysis(normalize_analysis(a, units)?),
            Payload::Emissions(mut e) => {
                let scale = units.scale(&e.unit, "emissions")?;
                let (value, unit) = units.normalize(e.value, &e.unit, "emissions")?;
                e.value = value;
                e.factor *= scale;
                e.unit = unit.to_string();
                Payload::Emissions(e)
            }
            other => other,
        })
    }

    /// Canonical unit of the headline quantity, when there is exactly one.
    pub fn primary_unit(&self) -> Option<&str> {
        match self {
            Payload::Measurement(m) => Some(&m.unit),
            Payload::Series(s) => Some(&s.unit),
            Payload::Analysis(a) => Some(&a.unit),
            Payload::Emissions(e) => Some(&e.unit),
            Payload::IndexMap(_) | Payload::ChangeReport(_) => Some("1"),
            _ => None,
        }
    }

    pub fn location(&self) -> Option<GeoPoint> {
        match self {
            Payload::Location { point, .. } => Some(*point),
            Payload::Measurement(m) => m.location,
            Payload::Readings(r) => Some(r.location),
            Payload::Series(s) => Some(s.location),
            Payload::Analysis(a) => Some(a.location),
            Payload::Image(i) => Some(i.location),
            _ => None,
        }
    }

    pub fn time_span(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        match self {
            Payload::Measurement(m) => m.timestamp.map(|t| (t, t)),
            Payload::Readings(r) => Some((r.timestamp, r.timestamp)),
            Payload::Series(s) => Some((s.points.first()?.timestamp, s.points.last()?.timestamp)),
            Payload::Analysis(a) => Some((a.start, a.end)),
            Payload::Image(i) => Some((i.acquired, i.acquired)),
            _ => None,
        }
    }

    pub fn uncertainty(&self) -> Option<f64> {
        match self {
            Payload::Measurement(m) => m.uncertainty,
            _ => None,
        }
    }

    /// Every (variable, unit) pair carried by the payload.
    pub fn units(&self) -> Vec<(&str, &str)> {
        match self {
            Payload::Measurement(m) => vec![(m.variable.as_str(), m.unit.as_str())],
            Payload::Readings(r) => r.values.iter().map(|m| (m.variable.as_str(), m.unit.as_str())).collect(),
            Payload::Series(s) => vec![(s.variable.as_str(), s.unit.as_str())],
            Payload::Analysis(a) => vec![(a.variable.as_str(), a.unit.as_str())],
            Payload::Emissions(e) => vec![("emissions", e.unit.as_str())],
            _ => Vec::new(),
        }
    }
}

fn normalize_measurement(mut m: Measurement, units: &UnitTable) -> Result<Measurement, CanonError> {
    let scale = units.scale(&m.unit, &m.variable)?;
    let (value, unit) = units.normalize(m.value, &m.unit, &m.variable)?;
    m.value = value;
    m.uncertainty = m.uncertainty.map(|u| u * scale.abs());
    m.unit = unit.to_string();
    Ok(m)
}

fn normalize_analysis(mut a: AnalysisReport, units: &UnitTable) -> Result<AnalysisReport, CanonError> {
    if units.is_canonical(&a.variable, &a.unit) {
        return Ok(a);
    }
    let scale = units.scale(&a.unit, &a.variable)?;
    let conv = |v: f64| units.normalize(v, &a.unit, &a.variable).map(|(x, _)| x);
    let (lo, hi) = (conv(a.stats.min)?, conv(a.stats.max)?);
    a.stats.min = lo.min(hi);
    a.stats.max = lo.max(hi);
    a.stats.mean = conv(a.stats.mean)?;
    a.stats.std *= scale.abs();
    a.trend.slope_per_day *= scale;
    for p in a.anomalies.iter_mut() {
        p.value = conv(p.value)?;
    }
    for hits in [a.exceedances.as_mut(), a.events.as_mut()].into_iter().flatten() {
        hits.threshold = conv(hits.threshold)?;
        for p in hits.points.iter_mut() {
            p.value = conv(p.value)?;
        }
    }
    for p in a.series.iter_mut() {
        if let Some(v) = p.value {
            p.value = Some(conv(v)?);
        }
    }
    a.unit = units.canonical_unit(&a.variable)?.to_string();
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCode {
    FormatError,
    UnknownTool,
    ArgError,
    Timeout,
    UnknownRegion,
    NoDataForDate,
    HorizonTooLong,
    EmptyRange,
    NoImagery,
    MissingBand,
    ShapeMismatch,
    UnknownFactorKey,
    UnresolvableReference,
    ProviderFailure,
    Normalization,
    ReturnTypeMismatch,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ToolFailure {
    pub code: FailureCode,
    pub message: String,
}

impl ToolFailure {
    pub fn new(code: FailureCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ObservationStatus {
    Ok,
    Error { code: FailureCode, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

/// Envelope around one tool result, as fed back to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub tool: String,
    pub status: ObservationStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<TimeSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GeoPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
}

impl Observation {
    pub fn ok(tool: &str, payload: Payload) -> Self {
        Self {
            tool: tool.to_string(),
            status: ObservationStatus::Ok,
            units: payload.primary_unit().map(str::to_string),
            timestamps: payload.time_span().map(|(start, end)| TimeSpan { start, end }),
            location: payload.location(),
            uncertainty: payload.uncertainty(),
            payload: Some(payload),
        }
    }

    pub fn error(tool: &str, failure: ToolFailure) -> Self {
        Self {
            tool: tool.to_string(),
            status: ObservationStatus::Error { code: failure.code, message: failure.message },
            payload: None,
            units: None,
            timestamps: None,
            location: None,
            uncertainty: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self.status, ObservationStatus::Ok)
    }

    pub fn failure_code(&self) -> Option<FailureCode> {
        match &self.status {
            ObservationStatus::Ok => None,
            ObservationStatus::Error { code, .. } => Some(*code),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn kelvin_measurement_becomes_celsius() {
        let p = Payload::Measurement(Measurement {
            variable: "temperature".into(),
            value: 300.0,
            unit: "K".into(),
            timestamp: None,
            location: None,
            uncertainty: Some(0.5),
        });
        let Payload::Measurement(m) = p.normalize(UnitTable::builtin()).unwrap() else { panic!() };
        assert_eq!(m.unit, "°C");
        assert!((m.value - 26.85).abs() < 1e-9);
        assert_eq!(m.uncertainty, Some(0.5));
    }

    #[test]
    fn series_normalizes_every_point() {
        let t = Utc.with_ymd_and_hms(2023, 4, 16, 0, 0, 0).unwrap();
        let p = Payload::Series(SeriesPayload {
            variable: "precipitation".into(),
            unit: "m".into(),
            location: GeoPoint::new(25.0, 51.0).unwrap(),
            points: vec![SeriesPoint { timestamp: t, value: Some(0.012) }, SeriesPoint { timestamp: t, value: None }],
        });
        let Payload::Series(s) = p.normalize(UnitTable::builtin()).unwrap() else { panic!() };
        assert_eq!(s.unit, "mm");
        assert!((s.points[0].value.unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(s.points[1].value, None);
    }

    #[test]
    fn unknown_unit_fails_normalization() {
        let p = Payload::Measurement(Measurement {
            variable: "precipitation".into(),
            value: 1.0,
            unit: "bucket".into(),
            timestamp: None,
            location: None,
            uncertainty: None,
        });
        assert!(p.normalize(UnitTable::builtin()).is_err());
    }
}
