use serde::{Deserialize, Serialize};

use super::CanonError;

/// A WGS84 coordinate in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = CanonError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, CanonError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(CanonError::InvalidPoint { lat, lon });
        }
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(CanonError::InvalidPoint { lat, lon });
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl std::fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Geometry of a regular or irregular latitude/longitude product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lats: Vec<f64>,
    lons: Vec<f64>,
    resolution_deg: f64,
}

impl GridSpec {
    /// Axes must be finite, strictly increasing and non-empty.
    pub fn new(lats: Vec<f64>, lons: Vec<f64>, resolution_deg: f64) -> Result<Self, CanonError> {
        if lats.is_empty() || lons.is_empty() {
            return Err(CanonError::InvalidGrid("empty axis".into()));
        }
        if !(resolution_deg.is_finite() && resolution_deg > 0.0) {
            return Err(CanonError::InvalidGrid(format!("resolution must be positive, got {resolution_deg}")));
        }
        for (name, axis) in [("lats", &lats), ("lons", &lons)] {
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(CanonError::InvalidGrid(format!("{name} contains non-finite values")));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CanonError::InvalidGrid(format!("{name} is not strictly increasing")));
            }
        }
        if lats.iter().any(|v| !(-90.0..=90.0).contains(v)) || lons.iter().any(|v| !(-180.0..=180.0).contains(v)) {
            return Err(CanonError::InvalidGrid("axis value out of range".into()));
        }
        Ok(Self { lats, lons, resolution_deg })
    }

    /// Regular grid with `n_lat` x `n_lon` nodes starting at the given origin.
    pub fn regular(lat0: f64, lon0: f64, n_lat: usize, n_lon: usize, resolution_deg: f64) -> Result<Self, CanonError> {
        let lats = (0..n_lat).map(|i| lat0 + i as f64 * resolution_deg).collect();
        let lons = (0..n_lon).map(|j| lon0 + j as f64 * resolution_deg).collect();
        Self::new(lats, lons, resolution_deg)
    }

    pub fn lats(&self) -> &[f64] {
        &self.lats
    }

    pub fn lons(&self) -> &[f64] {
        &self.lons
    }

    pub fn resolution_deg(&self) -> f64 {
        self.resolution_deg
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.lats.len(), self.lons.len())
    }

    pub fn node(&self, i: usize, j: usize) -> Option<GeoPoint> {
        let lat = *self.lats.get(i)?;
        let lon = *self.lons.get(j)?;
        GeoPoint::new(lat, lon).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(25.2854, 51.531).is_ok());
    }

    #[test]
    fn serde_validates() {
        let ok: GeoPoint = serde_json::from_str(r#"{"lat":25.0,"lon":51.0}"#).unwrap();
        assert_eq!(ok.lat(), 25.0);
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat":125.0,"lon":51.0}"#).is_err());
    }

    #[test]
    fn grid_requires_increasing_axes() {
        assert!(GridSpec::new(vec![1.0, 1.0], vec![2.0], 0.1).is_err());
        assert!(GridSpec::new(vec![], vec![2.0], 0.1).is_err());
        assert!(GridSpec::new(vec![1.0], vec![2.0], 0.0).is_err());
        let g = GridSpec::regular(25.0, 50.0, 3, 4, 0.1).unwrap();
        assert_eq!(g.shape(), (3, 4));
    }
}
