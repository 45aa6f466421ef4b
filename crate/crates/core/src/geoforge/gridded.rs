//! Plain-text gridded product format.
//!
//! ```text
//! gridded-fixture 1
//! source: <identifier>
//! cadence_seconds: 86400
//! zone: UTC                      (optional, applies to naive timestamps)
//! lats: 25.0 25.1 25.2
//! lons: 51.0 51.1
//! mask: 0 1 1 0 1 1              (optional, row-major, 1 = usable cell)
//! variable: temperature K
//! 2023-01-01,300.1,300.2,...     (one value per cell, row-major; empty = missing)
//! ```
//!
//! Any number of `variable:` blocks may follow. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};

use super::GeoError;
use crate::canon::{normalize_timestamp, CanonicalRecord, CanonicalSeries, GridSpec, UnitTable, Zone};

pub const GRIDDED_MAGIC: &str = "gridded-fixture 1";

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedVariable {
    pub unit: String,
    pub timestamps: Vec<DateTime<Utc>>,
    /// One row per timestamp, `n_lat * n_lon` values each.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedProduct {
    pub source: String,
    pub cadence_seconds: i64,
    pub grid: GridSpec,
    pub mask: Option<Vec<bool>>,
    pub variables: BTreeMap<String, GriddedVariable>,
}

fn header_err(line: usize, msg: impl Into<String>) -> GeoError {
    GeoError::Gridded { line, message: msg.into() }
}

fn parse_axis(line: usize, s: &str) -> Result<Vec<f64>, GeoError> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| header_err(line, format!("bad axis value `{t}`"))))
        .collect()
}

impl GriddedProduct {
    pub fn parse(text: &str) -> Result<Self, GeoError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, l)) if l == GRIDDED_MAGIC => {}
            Some((n, _)) => return Err(header_err(n, "missing `gridded-fixture 1` header")),
            None => return Err(header_err(0, "empty file")),
        }
        let mut source = None;
        let mut cadence = None;
        let mut zone = Zone::utc();
        let mut lats = None;
        let mut lons = None;
        let mut mask = None;
        let mut variables: BTreeMap<String, GriddedVariable> = BTreeMap::new();
        let mut current: Option<String> = None;
        let mut grid: Option<GridSpec> = None;

        for (n, line) in lines {
            if let Some(rest) = line.strip_prefix("variable:") {
                if grid.is_none() {
                    let (Some(la), Some(lo)) = (lats.take(), lons.take()) else {
                        return Err(header_err(n, "lats and lons must precede variables"));
                    };
                    grid = Some(build_grid(la, lo).map_err(|m| header_err(n, m))?);
                }
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(header_err(n, "expected `variable: <name> <unit>`"));
                };
                if variables.contains_key(name) {
                    return Err(header_err(n, format!("variable {name} repeated")));
                }
                variables.insert(
                    name.to_string(),
                    GriddedVariable { unit: unit.to_string(), timestamps: Vec::new(), values: Vec::new() },
                );
                current = Some(name.to_string());
                continue;
            }
            if let Some(var) = &current {
                let g = grid.as_ref().expect("grid set before first variable");
                let cells = g.lats().len() * g.lons().len();
                let mut fields = line.split(',');
                let ts = fields.next().unwrap_or_default();
                let ts = normalize_timestamp(ts, &zone).map_err(|e| header_err(n, e.to_string()))?;
                let row: Vec<Option<f64>> = fields
                    .map(|f| {
                        let f = f.trim();
                        if f.is_empty() {
                            Ok(None)
                        } else {
                            f.parse::<f64>()
                                .ok()
                                .filter(|v| v.is_finite())
                                .map(Some)
                                .ok_or_else(|| header_err(n, format!("bad value `{f}`")))
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if row.len() != cells {
                    return Err(header_err(n, format!("expected {cells} values, found {}", row.len())));
                }
                let v = variables.get_mut(var).expect("current variable exists");
                if v.timestamps.last().is_some_and(|last| *last >= ts) {
                    return Err(header_err(n, "timestamps must increase"));
                }
                v.timestamps.push(ts);
                v.values.push(row);
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| header_err(n, "expected `key: value`"))?;
            let value = value.trim();
            match key.trim() {
                "source" => source = Some(value.to_string()),
                "cadence_seconds" => {
                    let c: i64 = value.parse().map_err(|_| header_err(n, "bad cadence"))?;
                    if c <= 0 {
                        return Err(header_err(n, "cadence must be positive"));
                    }
                    cadence = Some(c);
                }
                "zone" => zone = Zone::parse(value).map_err(|e| header_err(n, e.to_string()))?,
                "lats" => lats = Some(parse_axis(n, value)?),
                "lons" => lons = Some(parse_axis(n, value)?),
                "mask" => {
                    let m: Vec<bool> = value
                        .split_whitespace()
                        .map(|t| match t {
                            "0" => Ok(false),
                            "1" => Ok(true),
                            _ => Err(header_err(n, format!("bad mask value `{t}`"))),
                        })
                        .collect::<Result<_, _>>()?;
                    mask = Some(m);
                }
                other => return Err(header_err(n, format!("unknown header key `{other}`"))),
            }
        }
        let grid = grid.ok_or_else(|| header_err(0, "no variables"))?;
        if let Some(m) = &mask {
            if m.len() != grid.lats().len() * grid.lons().len() {
                return Err(header_err(0, "mask size does not match grid"));
            }
        }
        Ok(Self {
            source: source.ok_or_else(|| header_err(0, "missing source"))?,
            cadence_seconds: cadence.ok_or_else(|| header_err(0, "missing cadence_seconds"))?,
            grid,
            mask,
            variables,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GeoError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn cell_index(&self, cell: (usize, usize)) -> Option<usize> {
        let (n_lat, n_lon) = self.grid.shape();
        (cell.0 < n_lat && cell.1 < n_lon).then_some(cell.0 * n_lon + cell.1)
    }

    pub fn is_usable(&self, cell: (usize, usize)) -> bool {
        match (self.cell_index(cell), &self.mask) {
            (Some(k), Some(m)) => m[k],
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    /// Canonical series for one cell and variable. Gaps longer than the
    /// cadence are filled with explicit missing records.
    pub fn extract_series(
        &self,
        cell: (usize, usize),
        variable: &str,
        city: Option<&str>,
        units: &UnitTable,
    ) -> Result<CanonicalSeries, GeoError> {
        let k = self.cell_index(cell).ok_or(GeoError::CellOutOfRange { i: cell.0, j: cell.1 })?;
        let var = self.variables.get(variable).ok_or_else(|| GeoError::VariableAbsent(variable.to_string()))?;
        let location = self.grid.node(cell.0, cell.1).expect("cell checked");
        let canonical = units.canonical_unit(variable)?.to_string();
        let step = Duration::seconds(self.cadence_seconds);
        let mut records = Vec::with_capacity(var.timestamps.len());
        let mut push = |timestamp, value: Option<f64>| {
            records.push(CanonicalRecord {
                timestamp,
                variable: variable.to_string(),
                value,
                unit: canonical.clone(),
                location,
                city: city.map(str::to_string),
                source: self.source.clone(),
            })
        };
        let mut prev: Option<DateTime<Utc>> = None;
        for (ts, row) in var.timestamps.iter().zip(&var.values) {
            if let Some(p) = prev {
                let mut t = p + step;
                while t < *ts {
                    push(t, None);
                    t += step;
                }
            }
            let value = match row[k] {
                Some(v) => Some(units.normalize(v, &var.unit, variable)?.0),
                None => None,
            };
            push(*ts, value);
            prev = Some(*ts);
        }
        Ok(CanonicalSeries::new(records, units)?)
    }
}

/// Resolution is the smallest axis step (1° for a single-node grid).
fn build_grid(lats: Vec<f64>, lons: Vec<f64>) -> Result<GridSpec, String> {
    let step = |axis: &[f64]| axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let res = step(&lats).min(step(&lons));
    let res = if res.is_finite() && res > 0.0 { res } else { 1.0 };
    GridSpec::new(lats, lons, res).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "gridded-fixture 1
source: era5-fixture
cadence_seconds: 86400
lats: 25.0 25.5
lons: 51.0 51.5
mask: 1 0 0 1
variable: temperature K
2023-01-01,300.0,301.0,302.0,303.0
2023-01-02,300.5,,302.5,303.5
2023-01-04,301.0,301.0,301.0,301.0
";

    #[test]
    fn parses_and_extracts_with_gap_fill() {
        let p = GriddedProduct::parse(SAMPLE).unwrap();
        assert_eq!(p.grid.shape(), (2, 2));
        assert!(p.is_usable((1, 1)) && !p.is_usable((0, 1)));
        let s = p.extract_series((0, 1), "temperature", Some("Doha"), UnitTable::builtin()).unwrap();
        let vals: Vec<_> = s.records().iter().map(|r| r.value).collect();
        assert_eq!(s.len(), 4);
        assert_eq!(s.unit(), Some("°C"));
        assert!((vals[0].unwrap() - 27.85).abs() < 1e-9);
        assert_eq!(vals[1], None);
        assert_eq!(vals[2], None);
        assert!((vals[3].unwrap() - 27.85).abs() < 1e-9);
    }

    #[test]
    fn absent_variable_and_bad_rows() {
        let p = GriddedProduct::parse(SAMPLE).unwrap();
        assert!(matches!(
            p.extract_series((0, 0), "precipitation", None, UnitTable::builtin()),
            Err(GeoError::VariableAbsent(_))
        ));
        assert!(GriddedProduct::parse(&SAMPLE.replace("303.5", "303.5,1")).is_err());
        assert!(GriddedProduct::parse(&SAMPLE.replace("gridded-fixture 1", "grid")).is_err());
    }
}
