use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Months, Utc};
use serde::{Deserialize, Serialize};

use crate::canon::CanonicalSeries;

pub const DEFAULT_DELTA_DAYS: i64 = 90;
pub const DEFAULT_RHO: f64 = 0.8;
pub const TRAILING_YEARS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub index: usize,
    pub delta_days: i64,
    pub start: DateTime<Utc>,
    /// Exclusive.
    pub end: DateTime<Utc>,
    pub observed: usize,
    pub expected: usize,
    pub completeness: f64,
    pub rho: f64,
}

/// Most frequent gap between consecutive records; the smaller gap wins a tie.
pub fn modal_cadence(series: &CanonicalSeries) -> Option<Duration> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in series.records().windows(2) {
        *counts.entry((w[1].timestamp - w[0].timestamp).num_seconds()).or_default() += 1;
    }
    let mut best: Option<(i64, usize)> = None;
    for (gap, n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((gap, n));
        }
    }
    best.map(|(g, _)| Duration::seconds(g))
}

/// Splits the trailing ten years of `series` into consecutive windows of
/// `delta_days`, anchored at the first record inside that span. Only windows
/// fully covered by the series are considered, and those with completeness
/// below `rho` are dropped.
pub fn segment_windows(series: &CanonicalSeries, delta_days: i64, rho: f64) -> Vec<WindowSpec> {
    assert!(delta_days > 0, "delta_days must be positive");
    assert!(rho > 0.0 && rho <= 1.0, "rho must lie in (0, 1]");
    let records = series.records();
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Vec::new();
    };
    let cadence = modal_cadence(series).unwrap_or_else(|| Duration::days(1));
    let horizon = last.timestamp.checked_sub_months(Months::new(12 * TRAILING_YEARS)).unwrap_or(first.timestamp);
    let anchor_idx = records.partition_point(|r| r.timestamp < horizon);
    let anchor = records[anchor_idx].timestamp;
    let delta = Duration::days(delta_days);
    let coverage_end = last.timestamp + cadence;
    let expected = (delta.num_seconds() / cadence.num_seconds()).max(1) as usize;

    let mut out = Vec::new();
    let mut cursor = anchor_idx;
    let mut t = 0usize;
    loop {
        let start = anchor + delta * t as i32;
        let end = start + delta;
        if end > coverage_end {
            break;
        }
        let mut observed = 0usize;
        while cursor < records.len() && records[cursor].timestamp < end {
            if records[cursor].value.is_some() {
                observed += 1;
            }
            cursor += 1;
        }
        let completeness = (observed as f64 / expected as f64).min(1.0);
        if completeness >= rho {
            out.push(WindowSpec { index: t, delta_days, start, end, observed, expected, completeness, rho });
        }
        t += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{CanonicalRecord, GeoPoint, UnitTable};
    use chrono::TimeZone;

    pub(crate) fn daily(n: usize, missing: impl Fn(usize) -> bool) -> CanonicalSeries {
        let t0 = Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap();
        let loc = GeoPoint::new(25.2854, 51.531).unwrap();
        let recs = (0..n)
            .map(|d| CanonicalRecord {
                timestamp: t0 + Duration::days(d as i64),
                variable: "temperature".into(),
                value: if missing(d) { None } else { Some(20.0 + (d % 7) as f64) },
                unit: "°C".into(),
                location: loc,
                city: Some("Doha".into()),
                source: "test".into(),
            })
            .collect();
        CanonicalSeries::new(recs, UnitTable::builtin()).unwrap()
    }

    #[test]
    fn ten_years_daily_gives_forty_windows() {
        let w = segment_windows(&daily(3650, |_| false), 90, 0.8);
        assert_eq!(w.len(), 40);
        for (t, win) in w.iter().enumerate() {
            assert_eq!(win.index, t);
            assert_eq!(win.end - win.start, Duration::days(90));
            assert_eq!(win.completeness, 1.0);
            if t > 0 {
                assert_eq!(win.start, w[t - 1].end);
            }
        }
    }

    #[test]
    fn half_missing_window_is_dropped() {
        let w = segment_windows(&daily(3650, |d| d / 90 == 7 && d % 2 == 0), 90, 0.8);
        let idx: Vec<_> = w.iter().map(|w| w.index).collect();
        assert_eq!(idx.len(), 39);
        assert!(!idx.contains(&7));
    }

    #[test]
    fn short_series_has_no_windows() {
        assert!(segment_windows(&daily(89, |_| false), 90, 0.8).is_empty());
        assert!(segment_windows(&CanonicalSeries::empty(), 90, 0.8).is_empty());
    }

    #[test]
    fn anchor_moves_to_trailing_span() {
        let s = daily(5000, |_| false);
        let w = segment_windows(&s, 90, 0.8);
        let last = s.records().last().unwrap().timestamp;
        assert!(w[0].start >= last.checked_sub_months(Months::new(120)).unwrap());
        assert!(w[0].start - Duration::days(1) < last.checked_sub_months(Months::new(120)).unwrap());
    }
}
