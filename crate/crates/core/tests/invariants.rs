use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;

use gulfclim::agent::answer_numbers;
use gulfclim::geoforge::{distance_km, nearest_grid_cell, segment_windows, DistanceMetric};
use gulfclim::textforge::{chunk_spans, cosine, filter_keyword, Keyword, KeywordIndex};
use gulfclim::toolkit::SeriesPoint;
use gulfclim::tools::{analyze_range, normalized_difference, RangeExtras};
use gulfclim::{CanonicalRecord, CanonicalSeries, GeoPoint, GridSpec, UnitTable};

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-6).then(|| v.iter().map(|x| x / n).collect())
}

proptest! {
    #[test]
    fn chunks_tile_the_stream(total in 1usize..20_000, length in 2usize..700, frac in 0.1f64..1.0) {
        let stride = ((length as f64 * frac) as usize).clamp(1, length);
        let spans = chunk_spans(total, length, stride);
        prop_assert_eq!(spans[0].0, 0);
        prop_assert_eq!(spans.last().unwrap().1, total);
        prop_assert_eq!(spans.len(), total.saturating_sub(length).div_ceil(stride) + 1);
        for w in spans.windows(2) {
            prop_assert_eq!(w[1].0, w[0].0 + stride);
            prop_assert_eq!(w[0].1 - w[1].0, length - stride);
        }
    }

    #[test]
    fn keyword_index_never_holds_a_near_pair(
        raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..80),
        tau in 0.5f64..0.99,
    ) {
        let mut index = KeywordIndex::new(4, tau).unwrap();
        for (n, v) in raw.iter().enumerate() {
            let Some(v) = unit(v) else { continue };
            let before = index.keywords().iter().map(|k| cosine(&v, &k.embedding)).fold(f64::NEG_INFINITY, f64::max);
            let verdict = filter_keyword(Keyword::new(&n.to_string(), v, None, None).unwrap(), &mut index).unwrap();
            prop_assert_eq!(verdict.is_kept(), before < tau);
        }
        let ks = index.keywords();
        for i in 0..ks.len() {
            for j in i + 1..ks.len() {
                prop_assert!(cosine(&ks[i].embedding, &ks[j].embedding) < tau);
            }
        }
    }

    #[test]
    fn nearest_cell_is_a_global_minimum(
        lat in 22.0f64..30.0, lon in 47.0f64..57.0, res in 0.05f64..0.1, equirect in any::<bool>(),
    ) {
        let metric = if equirect { DistanceMetric::Equirectangular } else { DistanceMetric::Spherical };
        let grid = GridSpec::regular(21.5, 46.5, (9.0 / res) as usize, (11.0 / res) as usize, res).unwrap();
        let p = GeoPoint::new(lat, lon).unwrap();
        let (i, j) = nearest_grid_cell(p, &grid, metric);
        let best = distance_km(metric, lat, lon, grid.lats()[i], grid.lons()[j]);
        for (a, la) in grid.lats().iter().enumerate() {
            for (b, lo) in grid.lons().iter().enumerate() {
                let d = distance_km(metric, lat, lon, *la, *lo);
                prop_assert!(d > best || (d == best && (i, j) <= (a, b)));
            }
        }
    }

    #[test]
    fn normalized_difference_is_bounded_and_antisymmetric(
        a in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 3),
        b in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 3),
    ) {
        let ab = normalized_difference(&a, &b);
        let ba = normalized_difference(&b, &a);
        for r in 0..3 {
            for c in 0..3 {
                match (ab[r][c], ba[r][c]) {
                    (Some(x), Some(y)) => {
                        prop_assert!((-1.0..=1.0).contains(&x));
                        prop_assert_eq!(x, -y);
                    }
                    (None, None) => prop_assert_eq!(a[r][c] + b[r][c], 0.0),
                    _ => prop_assert!(false, "masking is not symmetric"),
                }
            }
        }
    }

    #[test]
    fn trend_of_an_affine_series_is_its_slope(a in -50.0f64..50.0, b in -3.0f64..3.0, n in 3usize..200) {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let pts: Vec<SeriesPoint> = (0..n)
            .map(|d| SeriesPoint { timestamp: t0 + Duration::days(d as i64), value: Some(a + b * d as f64) })
            .collect();
        let loc = GeoPoint::new(25.0, 51.0).unwrap();
        let end = t0 + Duration::days(n as i64 - 1);
        let r = analyze_range("temperature", "°C", loc, t0, end, pts, 3.0, RangeExtras::None).unwrap();
        prop_assert!((r.trend.slope_per_day - b).abs() <= 1e-9 * (1.0 + b.abs()));
        prop_assert!(r.anomalies.is_empty());
    }

    #[test]
    fn kept_windows_are_disjoint_and_complete(
        n in 90usize..1500, gaps in prop::collection::vec(0usize..1500, 0..400), rho in 0.5f64..1.0,
    ) {
        let t0 = Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap();
        let loc = GeoPoint::new(25.2854, 51.531).unwrap();
        let recs = (0..n)
            .map(|d| CanonicalRecord {
                timestamp: t0 + Duration::days(d as i64),
                variable: "temperature".into(),
                value: (!gaps.contains(&d)).then_some(25.0),
                unit: "°C".into(),
                location: loc,
                city: None,
                source: "prop".into(),
            })
            .collect();
        let series = CanonicalSeries::new(recs, UnitTable::builtin()).unwrap();
        let ws = segment_windows(&series, 90, rho);
        for w in &ws {
            prop_assert!(w.completeness >= rho);
            prop_assert_eq!(w.end - w.start, Duration::days(90));
            let observed = series.slice(w.start, w.end).observed().count();
            prop_assert_eq!(observed, w.observed);
        }
        for p in ws.windows(2) {
            prop_assert!(p[0].end <= p[1].start);
        }
    }

    #[test]
    fn dates_never_count_as_answer_numbers(y in 1990u32..2100, m in 1u32..=12, d in 1u32..=28, v in 0.0f64..500.0) {
        let value = format!("{v:.1}");
        let text = format!("On {y:04}-{m:02}-{d:02} the reading was {value} mm [step 3].");
        prop_assert_eq!(answer_numbers(&text), vec![value]);
    }
}
