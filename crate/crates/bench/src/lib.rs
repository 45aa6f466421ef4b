//! Seeded inputs shared by the benchmarks.

use chrono::{Duration, TimeZone, Utc};
use gulfclim::{CanonicalRecord, CanonicalSeries, GeoPoint, UnitTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` random unit vectors of dimension `dim`.
pub fn unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Daily temperature series with every `gap_every`-th day missing (0 = none).
pub fn daily_series(days: usize, gap_every: usize, seed: u64) -> CanonicalSeries {
    let mut r = rng(seed);
    let t0 = Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap();
    let loc = GeoPoint::new(25.2854, 51.531).unwrap();
    let records = (0..days)
        .map(|d| CanonicalRecord {
            timestamp: t0 + Duration::days(d as i64),
            variable: "temperature".into(),
            value: (gap_every == 0 || d % gap_every != 0).then(|| 28.0 + r.gen_range(-3.0..3.0)),
            unit: "°C".into(),
            location: loc,
            city: Some("Doha".into()),
            source: "bench".into(),
        })
        .collect();
    CanonicalSeries::new(records, UnitTable::builtin()).expect("canonical series")
}

/// Random reflectance plane of `w` x `h` pixels.
pub fn plane(w: usize, h: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..h).map(|_| (0..w).map(|_| r.gen_range(0.0..1.0)).collect()).collect()
}
