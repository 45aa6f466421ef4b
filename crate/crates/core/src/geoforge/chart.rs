use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{GeoError, WindowSpec};
use crate::canon::{canonical_csv_string, CanonicalSeries, Provenance};
use crate::stats::{ols_slope, summarize, SummaryStats};

pub const CANVAS_WIDTH: u32 = 800;
pub const CANVAS_HEIGHT: u32 = 400;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 780.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_BOTTOM: f64 = 340.0;

pub const METADATA_HEADER: &str = "id,city,variable,unit,start,end,count,min,max,mean,std,slope_per_day,source";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMetadata {
    pub id: String,
    pub city: String,
    pub variable: String,
    pub unit: String,
    pub start: DateTime<Utc>,
    /// Exclusive.
    pub end: DateTime<Utc>,
    pub stats: SummaryStats,
    pub slope_per_day: f64,
    pub source: String,
}

impl ChartMetadata {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let s = &self.stats;
        let row = [
            self.id.clone(),
            self.city.clone(),
            self.variable.clone(),
            self.unit.clone(),
            crate::canon::format_timestamp(&self.start),
            crate::canon::format_timestamp(&self.end),
            s.count.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            self.slope_per_day.to_string(),
            self.source.clone(),
        ];
        w.write_record(METADATA_HEADER.split(',')).expect("in-memory write");
        w.write_record(&row).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// A rendered window chart with its metadata and the CSV slice it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartArtifact {
    pub metadata: ChartMetadata,
    pub svg: String,
    pub data: CanonicalSeries,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartFiles {
    pub svg: PathBuf,
    pub data_csv: PathBuf,
    pub metadata_csv: PathBuf,
}

pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

/// Summary statistics and OLS slope (per day since `origin`) of the observed values.
pub fn window_stats(series: &CanonicalSeries, origin: DateTime<Utc>) -> Option<(SummaryStats, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        series.observed().map(|(t, v)| ((t - origin).num_seconds() as f64 / 86_400.0, v)).unzip();
    let stats = summarize(&ys)?;
    Some((stats, ols_slope(&xs, &ys)))
}

impl ChartArtifact {
    pub fn data_csv(&self) -> String {
        canonical_csv_string(&self.data)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// Writes `<id>.svg`, `<id>.csv` (data) and `<id>.meta.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<ChartFiles, GeoError> {
        std::fs::create_dir_all(dir).map_err(|e| GeoError::Io(e.to_string()))?;
        let files = ChartFiles {
            svg: dir.join(format!("{}.svg", self.metadata.id)),
            data_csv: dir.join(format!("{}.csv", self.metadata.id)),
            metadata_csv: dir.join(format!("{}.meta.csv", self.metadata.id)),
        };
        let io = |e: std::io::Error| GeoError::Io(e.to_string());
        std::fs::write(&files.svg, &self.svg).map_err(io)?;
        std::fs::write(&files.data_csv, self.data_csv()).map_err(io)?;
        std::fs::write(&files.metadata_csv, self.metadata.to_csv()).map_err(io)?;
        Ok(files)
    }
}

/// Renders one window of a canonical series as a fixed-size SVG line chart.
pub fn build_chart(
    slice: &CanonicalSeries,
    window: &WindowSpec,
    city: &str,
    variable: &str,
) -> Result<ChartArtifact, GeoError> {
    if slice.records().iter().any(|r| r.timestamp < window.start || r.timestamp >= window.end) {
        return Err(GeoError::SliceOutsideWindow);
    }
    if slice.variable().is_some_and(|v| v != variable) {
        return Err(GeoError::VariableAbsent(variable.to_string()));
    }
    let (stats, slope) = window_stats(slice, window.start).ok_or(GeoError::EmptySlice)?;
    let unit = slice.unit().unwrap_or_default().to_string();
    let source = slice.records().first().map(|r| r.source.clone()).unwrap_or_default();
    let metadata = ChartMetadata {
        id: format!("{}_{}_w{:03}", slug(city), slug(variable), window.index),
        city: city.to_string(),
        variable: variable.to_string(),
        unit,
        start: window.start,
        end: window.end,
        stats,
        slope_per_day: slope,
        source,
    };
    let svg = render_svg(slice, &metadata);
    Ok(ChartArtifact { metadata, svg, data: slice.clone(), provenance: None })
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn render_svg(slice: &CanonicalSeries, meta: &ChartMetadata) -> String {
    let span = (meta.end - meta.start).num_seconds().max(1) as f64;
    let (mut lo, mut hi) = (meta.stats.min, meta.stats.max);
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let x_of = |t: DateTime<Utc>| PLOT_LEFT + (t - meta.start).num_seconds() as f64 / span * (PLOT_RIGHT - PLOT_LEFT);
    let y_of = |v: f64| PLOT_BOTTOM - (v - lo) / (hi - lo) * (PLOT_BOTTOM - PLOT_TOP);
    let last_day = meta.end - Duration::days(1);
    let title = format!(
        "{}: {} ({} to {})",
        meta.city,
        meta.variable,
        meta.start.format("%Y-%m-%d"),
        last_day.format("%Y-%m-%d")
    );

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" viewBox="0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}" font-family="DejaVu Sans, sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r#"<text x="400" y="24" text-anchor="middle" font-size="14">{}</text>"#, xml_escape(&title));
    let _ = writeln!(
        s,
        r##"<path d="M{PLOT_LEFT:.2} {PLOT_TOP:.2} L{PLOT_LEFT:.2} {PLOT_BOTTOM:.2} L{PLOT_RIGHT:.2} {PLOT_BOTTOM:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##
    );
    for k in 0..5 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{PLOT_LEFT:.2}" y2="{y:.2}" stroke="#000000" stroke-width="1"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            PLOT_LEFT - 4.0,
            PLOT_LEFT - 6.0,
            y + 4.0
        );
    }
    for (t, anchor) in [(meta.start, "start"), (meta.start + (meta.end - meta.start) / 2, "middle"), (last_day, "end")]
    {
        let x = x_of(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{PLOT_BOTTOM:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000" stroke-width="1"/><text x="{x:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"##,
            PLOT_BOTTOM + 4.0,
            PLOT_BOTTOM + 18.0,
            t.format("%Y-%m-%d")
        );
    }
    let _ = writeln!(s, r#"<text x="425" y="385" text-anchor="middle">date</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="18" y="190" text-anchor="middle" transform="rotate(-90 18 190)">{} ({})</text>"#,
        xml_escape(&meta.variable),
        xml_escape(&meta.unit)
    );

    // Missing records break the line; isolated points become dots.
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for r in slice.records() {
        match r.value {
            Some(v) => runs.last_mut().expect("non-empty").push((x_of(r.timestamp), y_of(v))),
            None if runs.last().is_some_and(|run| !run.is_empty()) => runs.push(Vec::new()),
            None => {}
        }
    }
    let mut d = String::new();
    for run in runs.iter().filter(|r| r.len() > 1) {
        for (k, (x, y)) in run.iter().enumerate() {
            let _ = write!(
                d,
                "{}{x:.2} {y:.2}",
                if k == 0 {
                    if d.is_empty() {
                        "M"
                    } else {
                        " M"
                    }
                } else {
                    " L"
                }
            );
        }
    }
    if !d.is_empty() {
        let _ = writeln!(s, r##"<path d="{d}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##);
    }
    for run in runs.iter().filter(|r| r.len() == 1) {
        let (x, y) = run[0];
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="#1f77b4"/>"##);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{CanonicalRecord, GeoPoint, UnitTable};
    use chrono::TimeZone;

    fn window_series(values: &[Option<f64>]) -> (CanonicalSeries, WindowSpec) {
        let t0 = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        let loc = GeoPoint::new(25.2854, 51.531).unwrap();
        let recs = values
            .iter()
            .enumerate()
            .map(|(d, v)| CanonicalRecord {
                timestamp: t0 + Duration::days(d as i64),
                variable: "temperature".into(),
                value: *v,
                unit: "°C".into(),
                location: loc,
                city: Some("Doha".into()),
                source: "test".into(),
            })
            .collect();
        let w = WindowSpec {
            index: 0,
            delta_days: 90,
            start: t0,
            end: t0 + Duration::days(90),
            observed: 0,
            expected: 90,
            completeness: 1.0,
            rho: 0.8,
        };
        (CanonicalSeries::new(recs, UnitTable::builtin()).unwrap(), w)
    }

    #[test]
    fn constant_series_has_zero_spread() {
        let (s, w) = window_series(&[Some(21.5); 90]);
        let c = build_chart(&s, &w, "Doha", "temperature").unwrap();
        assert_eq!(c.metadata.stats.std, 0.0);
        assert_eq!(c.metadata.slope_per_day, 0.0);
        assert_eq!(c.metadata.stats.mean, 21.5);
        assert_eq!(c.metadata.id, "doha_temperature_w000");
        assert!(c.svg.starts_with("<svg") && c.svg.ends_with("</svg>\n"));
    }

    #[test]
    fn rendering_is_repeatable_and_gaps_split_the_line() {
        let mut v: Vec<Option<f64>> = (0..90).map(|d| Some(d as f64)).collect();
        v[10] = None;
        v[12] = None;
        let (s, w) = window_series(&v);
        let a = build_chart(&s, &w, "Doha", "temperature").unwrap();
        let b = build_chart(&s, &w, "Doha", "temperature").unwrap();
        assert_eq!(a.svg, b.svg);
        assert_eq!(a.svg.matches(" M").count(), 1);
        assert_eq!(a.svg.matches("<circle").count(), 1);
        assert!((a.metadata.slope_per_day - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_or_misplaced_slices_are_rejected() {
        let (s, w) = window_series(&[None; 5]);
        assert!(matches!(build_chart(&s, &w, "Doha", "temperature"), Err(GeoError::EmptySlice)));
        let (s, mut w) = window_series(&[Some(1.0); 5]);
        w.start += Duration::days(1);
        assert!(matches!(build_chart(&s, &w, "Doha", "temperature"), Err(GeoError::SliceOutsideWindow)));
    }
}
