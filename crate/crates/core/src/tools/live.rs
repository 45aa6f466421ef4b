use std::collections::BTreeMap;
use std::time::Duration;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    ClimateProvider, EmissionFactorTable, ForecastData, ProviderKind, RasterImage, SearchProvider, StationData,
    StationFamily, StationRow, ToolsError,
};
use crate::canon::{date_start, GeoPoint};
use crate::geoforge::{BoundingBox, City, CityInventory, CityMatch};
use crate::toolkit::{Candidate, FailureCode, Measurement, SearchHit, ToolFailure};

/// Base URLs of the Open-Meteo services used by [`LiveProvider`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveEndpoints {
    pub archive: String,
    pub forecast: String,
    pub air_quality: String,
    pub flood: String,
    pub geocoding: String,
}

impl Default for LiveEndpoints {
    fn default() -> Self {
        Self {
            archive: "https://archive-api.open-meteo.com/v1/archive".into(),
            forecast: "https://api.open-meteo.com/v1/forecast".into(),
            air_quality: "https://air-quality-api.open-meteo.com/v1/air-quality".into(),
            flood: "https://flood-api.open-meteo.com/v1/flood".into(),
            geocoding: "https://geocoding-api.open-meteo.com/v1/search".into(),
        }
    }
}

const MAX_HORIZON: u32 = 16;

/// Provider backed by public HTTP weather services. Imagery and species
/// recognition have no live backend and always fail.
pub struct LiveProvider {
    client: reqwest::blocking::Client,
    endpoints: LiveEndpoints,
    cities: CityInventory,
    factors: EmissionFactorTable,
}

fn provider_failure(msg: impl std::fmt::Display) -> ToolFailure {
    ToolFailure::new(FailureCode::ProviderFailure, msg.to_string())
}

/// Maps service unit labels onto the unit table's spelling.
fn unit_label(raw: &str, variable: &str) -> String {
    match (variable, raw) {
        ("aqi", _) | ("uv_index", _) => "index".into(),
        _ => raw.replace('\u{3bc}', "\u{b5}"),
    }
}

type Columns = BTreeMap<String, (String, Vec<(NaiveDate, f64)>)>;

/// `(date, value)` columns of a `daily` or `hourly` block, hourly values
/// averaged per day. Keys are the service's column names.
pub(crate) fn parse_columns(body: &Value, block: &str) -> Result<Columns, ToolFailure> {
    let data = body.get(block).ok_or_else(|| provider_failure(format!("response lacks `{block}`")))?;
    let units = body.get(format!("{block}_units")).cloned().unwrap_or(Value::Null);
    let times: Vec<NaiveDate> = data
        .get("time")
        .and_then(Value::as_array)
        .ok_or_else(|| provider_failure("response lacks time axis"))?
        .iter()
        .map(|t| {
            let s = t.as_str().unwrap_or_default();
            NaiveDate::parse_from_str(&s[..s.len().min(10)], "%Y-%m-%d").map_err(provider_failure)
        })
        .collect::<Result<_, _>>()?;
    let mut out = BTreeMap::new();
    for (name, col) in data.as_object().into_iter().flatten() {
        if name == "time" {
            continue;
        }
        let Some(values) = col.as_array() else { continue };
        let mut per_day: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
        for (t, v) in times.iter().zip(values) {
            if let Some(x) = v.as_f64() {
                let e = per_day.entry(*t).or_default();
                e.0 += x;
                e.1 += 1;
            }
        }
        let unit = units.get(name).and_then(Value::as_str).unwrap_or_default().to_string();
        out.insert(name.clone(), (unit, per_day.into_iter().map(|(d, (s, n))| (d, s / n as f64)).collect()));
    }
    Ok(out)
}

fn station_of(body: &Value, fallback: GeoPoint) -> GeoPoint {
    match (body.get("latitude").and_then(Value::as_f64), body.get("longitude").and_then(Value::as_f64)) {
        (Some(la), Some(lo)) => GeoPoint::new(la, lo).unwrap_or(fallback),
        _ => fallback,
    }
}

/// (service column, canonical variable) per station family.
fn family_columns(family: StationFamily) -> &'static [(&'static str, &'static str)] {
    match family {
        StationFamily::Weather => &[
            ("temperature_2m_mean", "temperature"),
            ("relative_humidity_2m_mean", "relative_humidity"),
            ("wind_speed_10m_mean", "wind_speed"),
        ],
        StationFamily::Rain => &[("precipitation_sum", "precipitation")],
        StationFamily::Aqi => {
            &[("us_aqi", "aqi"), ("pm2_5", "pm2_5"), ("pm10", "pm10"), ("nitrogen_dioxide", "no2"), ("ozone", "o3")]
        }
    }
}

impl LiveProvider {
    pub fn new(endpoints: LiveEndpoints, factors: EmissionFactorTable, timeout: Duration) -> Result<Self, ToolsError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent("gulfclim/0.1")
            .build()
            .map_err(|e| ToolsError::Live(e.to_string()))?;
        Ok(Self { client, endpoints, cities: CityInventory::builtin(), factors })
    }

    fn get(&self, url: &str, query: &[(&str, String)]) -> Result<Value, ToolFailure> {
        let resp = self.client.get(url).query(query).send().map_err(provider_failure)?;
        let status = resp.status();
        let body: Value = resp.json().map_err(provider_failure)?;
        if !status.is_success() {
            let reason = body.get("reason").and_then(Value::as_str).unwrap_or("request failed");
            return Err(provider_failure(format!("{status}: {reason}")));
        }
        Ok(body)
    }

    fn coords(p: GeoPoint) -> Vec<(&'static str, String)> {
        vec![("latitude", p.lat().to_string()), ("longitude", p.lon().to_string()), ("timezone", "UTC".into())]
    }
}

impl ClimateProvider for LiveProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::LiveHttp
    }

    fn station_rows(
        &self,
        family: StationFamily,
        at: GeoPoint,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<StationData, ToolFailure> {
        let cols = family_columns(family);
        let names = cols.iter().map(|(c, _)| *c).collect::<Vec<_>>().join(",");
        let mut q = Self::coords(at);
        q.push(("start_date", start.to_string()));
        q.push(("end_date", end.to_string()));
        let (url, block) = match family {
            StationFamily::Aqi => (&self.endpoints.air_quality, "hourly"),
            _ => (&self.endpoints.archive, "daily"),
        };
        q.push((block, names));
        let body = self.get(url, &q)?;
        let columns = parse_columns(&body, block)?;
        let mut rows = Vec::new();
        for (col, variable) in cols {
            let Some((unit, values)) = columns.get(*col) else { continue };
            for (date, value) in values {
                rows.push(StationRow {
                    date: *date,
                    variable: variable.to_string(),
                    value: *value,
                    unit: unit_label(unit, variable),
                });
            }
        }
        rows.sort_by(|a, b| (a.date, &a.variable).cmp(&(b.date, &b.variable)));
        Ok(StationData { station: station_of(&body, at), rows })
    }

    fn forecast(&self, variable: &str, at: GeoPoint, horizon: u32) -> Result<ForecastData, ToolFailure> {
        if horizon > MAX_HORIZON {
            return Err(ToolFailure::new(
                FailureCode::HorizonTooLong,
                format!("horizon {horizon} exceeds {MAX_HORIZON} days"),
            ));
        }
        let (url, block, column) = match variable {
            "temperature" => (&self.endpoints.forecast, "daily", "temperature_2m_mean"),
            "precipitation" => (&self.endpoints.forecast, "daily", "precipitation_sum"),
            "uv_index" => (&self.endpoints.forecast, "daily", "uv_index_max"),
            "aqi" => (&self.endpoints.air_quality, "hourly", "us_aqi"),
            "pollen" => (&self.endpoints.air_quality, "hourly", "grass_pollen"),
            other => return Err(provider_failure(format!("no live forecast for {other}"))),
        };
        let mut q = Self::coords(at);
        q.push((block, column.to_string()));
        q.push(("forecast_days", (horizon + 1).to_string()));
        let body = self.get(url, &q)?;
        let columns = parse_columns(&body, block)?;
        let (unit, values) = columns.get(column).ok_or_else(|| provider_failure(format!("response lacks {column}")))?;
        let today = Utc::now().date_naive();
        let ahead: Vec<(NaiveDate, f64)> =
            values.iter().copied().filter(|(d, _)| *d > today).take(horizon as usize).collect();
        if ahead.len() < horizon as usize {
            return Err(ToolFailure::new(
                FailureCode::HorizonTooLong,
                format!("service returned {} of {horizon} days", ahead.len()),
            ));
        }
        Ok(ForecastData {
            first_day: ahead[0].0,
            station: station_of(&body, at),
            variable: variable.to_string(),
            unit: unit_label(unit, variable),
            values: ahead.into_iter().map(|(_, v)| v).collect(),
        })
    }

    fn discharge(&self, at: GeoPoint, date: NaiveDate) -> Result<Measurement, ToolFailure> {
        let mut q = Self::coords(at);
        q.push(("daily", "river_discharge".into()));
        q.push(("start_date", date.to_string()));
        q.push(("end_date", date.to_string()));
        let body = self.get(&self.endpoints.flood, &q)?;
        let columns = parse_columns(&body, "daily")?;
        let (unit, values) = columns
            .get("river_discharge")
            .ok_or_else(|| ToolFailure::new(FailureCode::NoDataForDate, "no discharge column"))?;
        let value = values
            .iter()
            .find(|(d, _)| *d == date)
            .map(|(_, v)| *v)
            .ok_or_else(|| ToolFailure::new(FailureCode::NoDataForDate, format!("no discharge for {date}")))?;
        Ok(Measurement {
            variable: "discharge".into(),
            value,
            unit: unit_label(unit, "discharge"),
            timestamp: Some(date_start(date)),
            location: Some(station_of(&body, at)),
            uncertainty: None,
        })
    }

    fn image(&self, at: GeoPoint, date: NaiveDate) -> Result<RasterImage, ToolFailure> {
        Err(ToolFailure::new(FailureCode::NoImagery, format!("no live imagery source configured for {at} on {date}")))
    }

    fn species(&self, reference: &str) -> Result<Vec<Candidate>, ToolFailure> {
        Err(ToolFailure::new(FailureCode::UnresolvableReference, format!("no live recognizer for `{reference}`")))
    }

    /// The bundled inventory first, then the geocoding service restricted
    /// to the Gulf bounding box.
    fn geocode(&self, region: &str) -> Result<CityMatch, ToolFailure> {
        if let Ok(m) = self.cities.lookup(region) {
            return Ok(m);
        }
        let body = self.get(&self.endpoints.geocoding, &[("name", region.to_string()), ("count", "5".into())])?;
        let hit = body
            .get("results")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|r| {
                let p = GeoPoint::new(r.get("latitude")?.as_f64()?, r.get("longitude")?.as_f64()?).ok()?;
                BoundingBox::GULF.contains(p).then(|| City {
                    name: r.get("name").and_then(Value::as_str).unwrap_or(region).to_string(),
                    country: r.get("country").and_then(Value::as_str).unwrap_or_default().to_string(),
                    point: p,
                })
            })
            .next();
        hit.map(|city| CityMatch { city, similarity: 1.0 }).ok_or_else(|| {
            ToolFailure::new(FailureCode::UnknownRegion, format!("`{region}` not found in the Gulf region"))
        })
    }

    fn emission_factor(&self, country: &str, industry: &str, year: i64) -> Result<f64, ToolFailure> {
        self.factors.factor(country, industry, year)
    }
}

/// Web search through a SearXNG instance's JSON API.
pub struct LiveSearch {
    client: reqwest::blocking::Client,
    endpoint: String,
}

impl LiveSearch {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, ToolsError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent("gulfclim/0.1")
            .build()
            .map_err(|e| ToolsError::Live(e.to_string()))?;
        Ok(Self { client, endpoint: endpoint.into() })
    }
}

pub(crate) fn parse_searx(body: &Value, k: usize) -> Vec<SearchHit> {
    body.get("results")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(|r| {
            Some(SearchHit {
                title: r.get("title")?.as_str()?.to_string(),
                url: r.get("url")?.as_str()?.to_string(),
                snippet: r.get("content").and_then(Value::as_str).unwrap_or_default().to_string(),
            })
        })
        .take(k)
        .collect()
}

impl SearchProvider for LiveSearch {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, ToolFailure> {
        let resp = self
            .client
            .get(&self.endpoint)
            .query(&[("q", query), ("format", "json")])
            .send()
            .map_err(provider_failure)?;
        if !resp.status().is_success() {
            return Err(provider_failure(format!("search returned {}", resp.status())));
        }
        let body: Value = resp.json().map_err(provider_failure)?;
        Ok(parse_searx(&body, k))
    }

    fn fetch(&self, url: &str) -> Result<Vec<u8>, ToolFailure> {
        let resp = self.client.get(url).send().map_err(provider_failure)?;
        if !resp.status().is_success() {
            return Err(provider_failure(format!("{url}: {}", resp.status())));
        }
        resp.bytes().map(|b| b.to_vec()).map_err(provider_failure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hourly_columns_average_per_day() {
        let body: Value = serde_json::from_str(
            r#"{"latitude":25.3,"longitude":51.5,"hourly_units":{"time":"iso8601","us_aqi":"USAQI","pm2_5":"μg/m³"},
                "hourly":{"time":["2023-04-15T00:00","2023-04-15T01:00","2023-04-16T00:00"],
                          "us_aqi":[80,90,null],"pm2_5":[10.0,20.0,30.0]}}"#,
        )
        .unwrap();
        let cols = parse_columns(&body, "hourly").unwrap();
        let (unit, aqi) = &cols["us_aqi"];
        assert_eq!(unit_label(unit, "aqi"), "index");
        assert_eq!(aqi, &vec![(NaiveDate::from_ymd_opt(2023, 4, 15).unwrap(), 85.0)]);
        assert_eq!(unit_label(&cols["pm2_5"].0, "pm2_5"), "µg/m³");
        assert_eq!(cols["pm2_5"].1.len(), 2);
        assert!(parse_columns(&body, "daily").is_err());
    }

    #[test]
    fn searx_results() {
        let body: Value = serde_json::from_str(
            r#"{"results":[{"title":"A","url":"https://a.example","content":"x"},{"url":"https://b.example"},{"title":"C","url":"https://c.example"}]}"#,
        )
        .unwrap();
        let hits = parse_searx(&body, 5);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[1].snippet, "");
    }
}
