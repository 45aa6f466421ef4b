use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use serde::Deserialize;

use super::{
    ClimateProvider, EmissionFactorTable, ForecastData, ProviderKind, RasterImage, SearchProvider, StationData,
    StationFamily, StationRow, ToolsError,
};
use crate::canon::{date_start, GeoPoint, UnitTable};
use crate::geoforge::{
    nearest_masked_cell, point_distance_km, BoundingBox, CityInventory, CityMatch, DistanceMetric, GeoError,
    GriddedProduct,
};
use crate::textforge::content_words;
use crate::toolkit::{Candidate, FailureCode, Measurement, SearchHit, ToolFailure};

/// `provider.toml` in a fixture directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    /// The "today" of the fixture world; forecasts start the day after.
    pub as_of: NaiveDate,
    #[serde(default = "default_radius")]
    pub station_radius_km: f64,
    #[serde(default = "default_horizon")]
    pub max_horizon: u32,
}

fn default_radius() -> f64 {
    50.0
}

fn default_horizon() -> u32 {
    16
}

#[derive(Debug, Clone, Deserialize)]
struct StationCsvRow {
    lat: f64,
    lon: f64,
    date: NaiveDate,
    variable: String,
    value: f64,
    unit: String,
}

#[derive(Debug, Clone, Deserialize)]
struct ForecastCsvRow {
    lat: f64,
    lon: f64,
    step: u32,
    variable: String,
    value: f64,
    unit: String,
}

#[derive(Debug, Clone, Deserialize)]
struct SpeciesRow {
    #[serde(rename = "ref")]
    reference: String,
    species: String,
    confidence: f64,
}

#[derive(Debug, Clone)]
struct Station {
    point: GeoPoint,
    rows: Vec<StationRow>,
}

/// Offline provider reading everything from a fixture directory.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    config: ProviderConfig,
    stations: BTreeMap<StationFamily, Vec<Station>>,
    forecasts: Vec<(GeoPoint, String, String, BTreeMap<u32, f64>)>,
    discharge: Option<GriddedProduct>,
    images: Vec<(GeoPoint, NaiveDate, RasterImage)>,
    species: BTreeMap<String, Vec<Candidate>>,
    cities: CityInventory,
    factors: EmissionFactorTable,
    delay: Option<Duration>,
}

fn fixture_err(path: &Path, message: impl ToString) -> ToolsError {
    ToolsError::Fixture { path: path.display().to_string(), message: message.to_string() }
}

fn read_optional(path: &Path) -> Result<Option<String>, ToolsError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(fixture_err(path, e)),
    }
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ToolsError> {
    let Some(text) = read_optional(path)? else { return Ok(Vec::new()) };
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| fixture_err(path, e))
}

fn point(path: &Path, lat: f64, lon: f64) -> Result<GeoPoint, ToolsError> {
    GeoPoint::new(lat, lon).map_err(|e| fixture_err(path, e))
}

impl FixtureProvider {
    pub fn load(dir: &Path) -> Result<Self, ToolsError> {
        let cfg_path = dir.join("provider.toml");
        let cfg_text = std::fs::read_to_string(&cfg_path).map_err(|e| fixture_err(&cfg_path, e))?;
        let config: ProviderConfig = toml::from_str(&cfg_text).map_err(|e| fixture_err(&cfg_path, e))?;

        let mut stations = BTreeMap::new();
        for family in [StationFamily::Weather, StationFamily::Rain, StationFamily::Aqi] {
            let path = dir.join(format!("{}.csv", family.as_str()));
            let mut grouped: Vec<Station> = Vec::new();
            for row in read_csv::<StationCsvRow>(&path)? {
                let p = point(&path, row.lat, row.lon)?;
                let r = StationRow { date: row.date, variable: row.variable, value: row.value, unit: row.unit };
                match grouped.iter_mut().find(|s| s.point == p) {
                    Some(s) => s.rows.push(r),
                    None => grouped.push(Station { point: p, rows: vec![r] }),
                }
            }
            for s in grouped.iter_mut() {
                s.rows.sort_by(|a, b| (a.date, &a.variable).cmp(&(b.date, &b.variable)));
            }
            stations.insert(family, grouped);
        }

        let fc_path = dir.join("forecast.csv");
        let mut forecasts: Vec<(GeoPoint, String, String, BTreeMap<u32, f64>)> = Vec::new();
        for row in read_csv::<ForecastCsvRow>(&fc_path)? {
            let p = point(&fc_path, row.lat, row.lon)?;
            match forecasts.iter_mut().find(|(q, v, _, _)| *q == p && *v == row.variable) {
                Some((_, _, unit, steps)) => {
                    if *unit != row.unit {
                        return Err(fixture_err(&fc_path, format!("mixed units for {}", row.variable)));
                    }
                    steps.insert(row.step, row.value);
                }
                None => forecasts.push((p, row.variable, row.unit, BTreeMap::from([(row.step, row.value)]))),
            }
        }

        let grid_path = dir.join("discharge.grid");
        let discharge = match read_optional(&grid_path)? {
            Some(text) => Some(GriddedProduct::parse(&text).map_err(|e| fixture_err(&grid_path, e))?),
            None => None,
        };

        let mut images = Vec::new();
        let img_dir = dir.join("imagery");
        if img_dir.is_dir() {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&img_dir)
                .map_err(|e| fixture_err(&img_dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let text = std::fs::read_to_string(&p).map_err(|e| fixture_err(&p, e))?;
                let img: RasterImage = serde_json::from_str(&text).map_err(|e| fixture_err(&p, e))?;
                images.push((img.location, img.acquired.date_naive(), img));
            }
        }

        let sp_path = dir.join("species.csv");
        let mut species: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
        for row in read_csv::<SpeciesRow>(&sp_path)? {
            if !(0.0..=1.0).contains(&row.confidence) {
                return Err(fixture_err(&sp_path, format!("confidence {} outside [0, 1]", row.confidence)));
            }
            species
                .entry(row.reference)
                .or_default()
                .push(Candidate { species: row.species, confidence: row.confidence });
        }
        for list in species.values_mut() {
            list.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| a.species.cmp(&b.species)));
        }

        let cities_path = dir.join("cities.csv");
        let cities = match read_optional(&cities_path)? {
            Some(text) => {
                CityInventory::from_csv(&text, BoundingBox::GULF).map_err(|e| fixture_err(&cities_path, e))?
            }
            None => CityInventory::builtin(),
        };

        let ef_path = dir.join("emission_factors.csv");
        let factors = match read_optional(&ef_path)? {
            Some(text) => EmissionFactorTable::from_csv(&text).map_err(|e| fixture_err(&ef_path, e))?,
            None => EmissionFactorTable::default(),
        };

        Ok(Self { config, stations, forecasts, discharge, images, species, cities, factors, delay: None })
    }

    /// Sleeps before answering every request; used to exercise timeouts.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn pause(&self) {
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
    }

    fn nearest<'a, T>(&self, items: impl Iterator<Item = (GeoPoint, &'a T)>, at: GeoPoint) -> Option<&'a T> {
        let mut best: Option<(f64, &T)> = None;
        for (p, item) in items {
            let d = point_distance_km(DistanceMetric::Spherical, p, at);
            if d <= self.config.station_radius_km && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, item));
            }
        }
        best.map(|(_, t)| t)
    }
}

impl ClimateProvider for FixtureProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Fixture
    }

    fn station_rows(
        &self,
        family: StationFamily,
        at: GeoPoint,
        start: NaiveDate,
        end: NaiveDate,
    ) -> Result<StationData, ToolFailure> {
        self.pause();
        let stations = self.stations.get(&family).map(Vec::as_slice).unwrap_or_default();
        let station = self.nearest(stations.iter().map(|s| (s.point, s)), at).ok_or_else(|| {
            ToolFailure::new(
                FailureCode::NoDataForDate,
                format!("no {} station within {} km of {at}", family.as_str(), self.config.station_radius_km),
            )
        })?;
        let rows: Vec<StationRow> = station.rows.iter().filter(|r| r.date >= start && r.date <= end).cloned().collect();
        Ok(StationData { station: station.point, rows })
    }

    fn forecast(&self, variable: &str, at: GeoPoint, horizon: u32) -> Result<ForecastData, ToolFailure> {
        self.pause();
        if horizon > self.config.max_horizon {
            return Err(ToolFailure::new(
                FailureCode::HorizonTooLong,
                format!("horizon {horizon} exceeds the maximum of {} days", self.config.max_horizon),
            ));
        }
        let candidates = self.forecasts.iter().filter(|(_, v, _, _)| v == variable).map(|f| (f.0, f));
        let (p, _, unit, steps) = self
            .nearest(candidates, at)
            .ok_or_else(|| ToolFailure::new(FailureCode::NoDataForDate, format!("no {variable} forecast near {at}")))?;
        let values = (1..=horizon)
            .map(|s| {
                steps.get(&s).copied().ok_or_else(|| {
                    ToolFailure::new(FailureCode::HorizonTooLong, format!("{variable} forecast stops before day {s}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ForecastData {
            first_day: self.config.as_of.succ_opt().expect("date in range"),
            station: *p,
            variable: variable.to_string(),
            unit: unit.clone(),
            values,
        })
    }

    fn discharge(&self, at: GeoPoint, date: NaiveDate) -> Result<Measurement, ToolFailure> {
        self.pause();
        let no_data = |m: String| ToolFailure::new(FailureCode::NoDataForDate, m);
        let product = self.discharge.as_ref().ok_or_else(|| no_data("no discharge product loaded".into()))?;
        let cell = nearest_masked_cell(at, &product.grid, DistanceMetric::Spherical, |i, j| product.is_usable((i, j)))
            .ok_or_else(|| no_data("discharge grid has no river cells".into()))?;
        let series = product
            .extract_series(cell, "discharge", None, UnitTable::builtin())
            .map_err(|e: GeoError| ToolFailure::new(FailureCode::ProviderFailure, e.to_string()))?;
        let ts = date_start(date);
        let rec = series
            .records()
            .iter()
            .find(|r| r.timestamp == ts)
            .ok_or_else(|| no_data(format!("no discharge for {date}")))?;
        let value = rec.value.ok_or_else(|| no_data(format!("discharge missing on {date}")))?;
        Ok(Measurement {
            variable: "discharge".into(),
            value,
            unit: rec.unit.clone(),
            timestamp: Some(ts),
            location: Some(rec.location),
            uncertainty: None,
        })
    }

    fn image(&self, at: GeoPoint, date: NaiveDate) -> Result<RasterImage, ToolFailure> {
        self.pause();
        let same_day = self.images.iter().filter(|(_, d, _)| *d == date).map(|(p, _, img)| (*p, img));
        self.nearest(same_day, at)
            .cloned()
            .ok_or_else(|| ToolFailure::new(FailureCode::NoImagery, format!("no imagery near {at} on {date}")))
    }

    fn species(&self, reference: &str) -> Result<Vec<Candidate>, ToolFailure> {
        self.pause();
        self.species.get(reference).cloned().ok_or_else(|| {
            ToolFailure::new(FailureCode::UnresolvableReference, format!("unknown media reference `{reference}`"))
        })
    }

    fn geocode(&self, region: &str) -> Result<CityMatch, ToolFailure> {
        self.pause();
        self.cities.lookup(region).map_err(|e| ToolFailure::new(FailureCode::UnknownRegion, e.to_string()))
    }

    fn emission_factor(&self, country: &str, industry: &str, year: i64) -> Result<f64, ToolFailure> {
        self.pause();
        self.factors.factor(country, industry, year)
    }
}

#[derive(Debug, Clone, Deserialize)]
struct SearchLine {
    query: String,
    results: Vec<SearchHit>,
}

/// Offline search: recorded result lists keyed by normalized query, plus a
/// url-to-file map for fetches.
#[derive(Debug, Clone, Default)]
pub struct FixtureSearch {
    recorded: BTreeMap<String, Vec<SearchHit>>,
    documents: BTreeMap<String, PathBuf>,
}

fn normalize_query(q: &str) -> String {
    q.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct DocRow {
    url: String,
    path: String,
}

impl FixtureSearch {
    /// Reads `search.jsonl` and `documents/index.csv` under `dir`; both optional.
    pub fn load(dir: &Path) -> Result<Self, ToolsError> {
        let mut out = Self::default();
        let path = dir.join("search.jsonl");
        if let Some(text) = read_optional(&path)? {
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let rec: SearchLine =
                    serde_json::from_str(line).map_err(|e| fixture_err(&path, format!("line {}: {e}", n + 1)))?;
                out.recorded.insert(normalize_query(&rec.query), rec.results);
            }
        }
        let doc_dir = dir.join("documents");
        let index = doc_dir.join("index.csv");
        for row in read_csv::<DocRow>(&index)? {
            out.documents.insert(row.url, doc_dir.join(row.path));
        }
        Ok(out)
    }

    pub fn with_results(mut self, query: &str, results: Vec<SearchHit>) -> Self {
        self.recorded.insert(normalize_query(query), results);
        self
    }
}

impl SearchProvider for FixtureSearch {
    /// Exact recorded query first; otherwise every recorded hit ranked by
    /// how many query content words its title and snippet share.
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchHit>, ToolFailure> {
        if let Some(hits) = self.recorded.get(&normalize_query(query)) {
            return Ok(hits.iter().take(k).cloned().collect());
        }
        let words: BTreeSet<String> = content_words(query).collect();
        let mut seen = BTreeSet::new();
        let mut scored: Vec<(usize, &SearchHit)> = Vec::new();
        for hit in self.recorded.values().flatten() {
            if !seen.insert(hit.url.as_str()) {
                continue;
            }
            let text: BTreeSet<String> = content_words(&format!("{} {}", hit.title, hit.snippet)).collect();
            let overlap = words.iter().filter(|w| text.contains(*w)).count();
            if overlap > 0 {
                scored.push((overlap, hit));
            }
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.url.cmp(&b.1.url)));
        Ok(scored.into_iter().take(k).map(|(_, h)| h.clone()).collect())
    }

    fn fetch(&self, url: &str) -> Result<Vec<u8>, ToolFailure> {
        let path = self.documents.get(url).ok_or_else(|| {
            ToolFailure::new(FailureCode::UnresolvableReference, format!("no document recorded for {url}"))
        })?;
        std::fs::read(path)
            .map_err(|e| ToolFailure::new(FailureCode::ProviderFailure, format!("{}: {e}", path.display())))
    }
}
