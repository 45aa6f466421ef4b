use serde::{Deserialize, Serialize};

use crate::canon::{GeoPoint, GridSpec};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Great-circle distance via the haversine formula.
    #[default]
    Spherical,
    /// Planar approximation scaled by the cosine of the midpoint latitude.
    Equirectangular,
}

/// Longitude difference in degrees, wrapped into [-180, 180].
fn wrapped_dlon(lon_a: f64, lon_b: f64) -> f64 {
    let mut d = lon_b - lon_a;
    if d > 180.0 {
        d -= 360.0;
    } else if d < -180.0 {
        d += 360.0;
    }
    d
}

/// Distance in kilometres between `(lat_a, lon_a)` and `(lat_b, lon_b)`, degrees in.
pub fn distance_km(metric: DistanceMetric, lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let dphi = (lat_b - lat_a).to_radians();
    let dlam = wrapped_dlon(lon_a, lon_b).to_radians();
    match metric {
        DistanceMetric::Spherical => {
            let s_phi = (dphi / 2.0).sin();
            let s_lam = (dlam / 2.0).sin();
            let a = s_phi * s_phi + lat_a.to_radians().cos() * lat_b.to_radians().cos() * s_lam * s_lam;
            2.0 * EARTH_RADIUS_KM * a.clamp(0.0, 1.0).sqrt().asin()
        }
        DistanceMetric::Equirectangular => {
            let mid = ((lat_a + lat_b) / 2.0).to_radians();
            let x = dlam * mid.cos();
            EARTH_RADIUS_KM * (x * x + dphi * dphi).sqrt()
        }
    }
}

pub fn point_distance_km(metric: DistanceMetric, a: GeoPoint, b: GeoPoint) -> f64 {
    distance_km(metric, a.lat(), a.lon(), b.lat(), b.lon())
}

/// Column candidates for one row: for a fixed row latitude the distance grows
/// with the wrapped longitude gap, so only the nodes bracketing `lon` and the
/// two axis ends (for wrap-around) can be the row minimum.
fn lon_candidates(lons: &[f64], lon: f64) -> [usize; 4] {
    let n = lons.len();
    let upper = lons.partition_point(|&x| x < lon).min(n - 1);
    let lower = upper.saturating_sub(1);
    let mut c = [0, lower, upper, n - 1];
    c.sort_unstable();
    c
}

/// Index `(i, j)` of the grid node nearest to `city`. Ties go to the
/// lexicographically smallest index pair.
pub fn nearest_grid_cell(city: GeoPoint, grid: &GridSpec, metric: DistanceMetric) -> (usize, usize) {
    let (lat, lon) = (city.lat(), city.lon());
    let cols = lon_candidates(grid.lons(), lon);
    let mut best = (0, 0);
    let mut best_d = f64::INFINITY;
    for (i, &node_lat) in grid.lats().iter().enumerate() {
        let mut prev = usize::MAX;
        for &j in &cols {
            if j == prev {
                continue;
            }
            prev = j;
            let d = distance_km(metric, lat, lon, node_lat, grid.lons()[j]);
            if d < best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Nearest node among those where `mask(i, j)` holds.
pub fn nearest_masked_cell(
    city: GeoPoint,
    grid: &GridSpec,
    metric: DistanceMetric,
    mask: impl Fn(usize, usize) -> bool,
) -> Option<(usize, usize)> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for (i, &node_lat) in grid.lats().iter().enumerate() {
        for (j, &node_lon) in grid.lons().iter().enumerate() {
            if !mask(i, j) {
                continue;
            }
            let d = distance_km(metric, city.lat(), city.lon(), node_lat, node_lon);
            if d < best_d {
                best_d = d;
                best = Some((i, j));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(city: GeoPoint, grid: &GridSpec, metric: DistanceMetric) -> (usize, usize) {
        nearest_masked_cell(city, grid, metric, |_, _| true).unwrap()
    }

    #[test]
    fn node_itself_is_nearest() {
        let grid = GridSpec::regular(24.0, 49.0, 31, 31, 0.1).unwrap();
        let p = GeoPoint::new(25.0, 50.0).unwrap();
        for m in [DistanceMetric::Spherical, DistanceMetric::Equirectangular] {
            let (i, j) = nearest_grid_cell(p, &grid, m);
            assert!((grid.lats()[i] - 25.0).abs() < 1e-9 && (grid.lons()[j] - 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn one_degree_of_latitude() {
        let d = distance_km(DistanceMetric::Spherical, 25.0, 50.0, 26.0, 50.0);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::PI / 180.0).abs() < 1e-9);
    }

    #[test]
    fn midpoints_break_ties_toward_smaller_index() {
        let grid = GridSpec::regular(25.0, 50.0, 8, 8, 0.0625).unwrap();
        for m in [DistanceMetric::Spherical, DistanceMetric::Equirectangular] {
            let p = GeoPoint::new(25.125, 50.03125).unwrap();
            assert_eq!(nearest_grid_cell(p, &grid, m), (2, 0));
            let p = GeoPoint::new(25.09375, 50.125).unwrap();
            assert_eq!(nearest_grid_cell(p, &grid, m), (1, 2));
        }
    }

    #[test]
    fn wraps_across_the_antimeridian() {
        let grid = GridSpec::new(vec![0.0], vec![-179.5, 0.0, 170.0], 0.5).unwrap();
        let p = GeoPoint::new(0.0, 179.9).unwrap();
        assert_eq!(nearest_grid_cell(p, &grid, DistanceMetric::Spherical), (0, 0));
        assert_eq!(nearest_grid_cell(p, &grid, DistanceMetric::Equirectangular), (0, 0));
    }

    proptest! {
        #[test]
        fn fast_path_matches_exhaustive_scan(
            lat in 12.0f64..33.0, lon in 34.0f64..60.0,
            lat0 in 10.0f64..30.0, lon0 in 30.0f64..55.0,
            n_lat in 1usize..40, n_lon in 1usize..40, res in 0.05f64..0.5,
        ) {
            let grid = GridSpec::regular(lat0, lon0, n_lat, n_lon, res).unwrap();
            let p = GeoPoint::new(lat, lon).unwrap();
            for m in [DistanceMetric::Spherical, DistanceMetric::Equirectangular] {
                prop_assert_eq!(nearest_grid_cell(p, &grid, m), brute(p, &grid, m));
            }
        }
    }
}
