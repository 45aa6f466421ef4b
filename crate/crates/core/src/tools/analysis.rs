use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::canon::GeoPoint;
use crate::stats::{ols_slope, summarize};
use crate::toolkit::{
    AnalysisReport, FailureCode, FlaggedPoint, SeriesPoint, ThresholdHits, ToolFailure, Trend, TrendDirection,
};

/// Thresholds used by the analysis and change tools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub z_threshold: f64,
    pub aqi_exceedance: f64,
    pub heavy_rain_mm: f64,
    pub degradation_threshold: f64,
    pub search_results: usize,
    pub summary_words: usize,
    pub default_forecast_days: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            z_threshold: 3.0,
            aqi_exceedance: 100.0,
            heavy_rain_mm: 10.0,
            degradation_threshold: -0.1,
            search_results: 5,
            summary_words: 80,
            default_forecast_days: 3,
        }
    }
}

/// Optional threshold scans attached to a range analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeExtras {
    None,
    Exceedances(f64),
    Events(f64),
}

fn above(points: &[(DateTime<Utc>, f64)], threshold: f64) -> ThresholdHits {
    ThresholdHits {
        threshold,
        points: points
            .iter()
            .filter(|(_, v)| *v > threshold)
            .map(|(t, v)| FlaggedPoint { timestamp: *t, value: *v, z: None })
            .collect(),
    }
}

/// Statistics, least-squares trend (per day) and |z| anomalies over the
/// observed points of a range.
#[allow(clippy::too_many_arguments)]
pub fn analyze_range(
    variable: &str,
    unit: &str,
    location: GeoPoint,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    series: Vec<SeriesPoint>,
    z_threshold: f64,
    extras: RangeExtras,
) -> Result<AnalysisReport, ToolFailure> {
    let observed: Vec<(DateTime<Utc>, f64)> = series.iter().filter_map(|p| p.value.map(|v| (p.timestamp, v))).collect();
    let values: Vec<f64> = observed.iter().map(|(_, v)| *v).collect();
    let stats = summarize(&values)
        .ok_or_else(|| ToolFailure::new(FailureCode::EmptyRange, "no observations in the requested range"))?;
    let xs: Vec<f64> = observed.iter().map(|(t, _)| (*t - start).num_seconds() as f64 / 86_400.0).collect();
    let slope = ols_slope(&xs, &values);
    let direction = if slope.abs() < 1e-12 {
        TrendDirection::Flat
    } else if slope > 0.0 {
        TrendDirection::Increasing
    } else {
        TrendDirection::Decreasing
    };
    let anomalies = if stats.std > 0.0 {
        observed
            .iter()
            .filter_map(|(t, v)| {
                let z = (v - stats.mean) / stats.std;
                (z.abs() > z_threshold).then_some(FlaggedPoint { timestamp: *t, value: *v, z: Some(z) })
            })
            .collect()
    } else {
        Vec::new()
    };
    let (exceedances, events) = match extras {
        RangeExtras::None => (None, None),
        RangeExtras::Exceedances(th) => (Some(above(&observed, th)), None),
        RangeExtras::Events(th) => (None, Some(above(&observed, th))),
    };
    Ok(AnalysisReport {
        variable: variable.to_string(),
        unit: unit.to_string(),
        location,
        start,
        end,
        stats,
        trend: Trend { slope_per_day: slope, direction },
        anomalies,
        exceedances,
        events,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn run(values: &[f64]) -> AnalysisReport {
        let t0 = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        let series = values
            .iter()
            .enumerate()
            .map(|(d, v)| SeriesPoint { timestamp: t0 + Duration::days(d as i64), value: Some(*v) })
            .collect();
        let end = t0 + Duration::days(values.len() as i64 - 1);
        analyze_range(
            "aqi",
            "index",
            GeoPoint::new(29.37, 47.97).unwrap(),
            t0,
            end,
            series,
            3.0,
            RangeExtras::Exceedances(100.0),
        )
        .unwrap()
    }

    #[test]
    fn constant_series_is_flat() {
        let r = run(&[42.0; 30]);
        assert_eq!(r.stats.std, 0.0);
        assert_eq!(r.trend.slope_per_day, 0.0);
        assert_eq!(r.trend.direction, TrendDirection::Flat);
        assert!(r.anomalies.is_empty());
    }

    #[test]
    fn linear_series_has_unit_slope() {
        let v: Vec<f64> = (0..90).map(f64::from).collect();
        let r = run(&v);
        assert!((r.trend.slope_per_day - 1.0).abs() < 1e-9);
        assert_eq!(r.exceedances.unwrap().points.len(), 0);
    }

    #[test]
    fn single_spike_is_the_only_anomaly() {
        let mut v: Vec<f64> = (0..90).map(|d| 50.0 + (d % 5) as f64).collect();
        v[40] += 200.0;
        let r = run(&v);
        assert_eq!(r.anomalies.len(), 1);
        assert_eq!(r.anomalies[0].value, v[40]);
        assert_eq!(r.exceedances.unwrap().points.len(), 1);
    }

    #[test]
    fn empty_range_fails() {
        let t0 = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        let e = analyze_range("aqi", "index", GeoPoint::new(0.0, 0.0).unwrap(), t0, t0, vec![], 3.0, RangeExtras::None);
        assert_eq!(e.unwrap_err().code, FailureCode::EmptyRange);
    }
}
