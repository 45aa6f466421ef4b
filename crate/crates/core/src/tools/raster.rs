use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::canon::GeoPoint;
use crate::stats::mean;
use crate::toolkit::{ChangeReport, FailureCode, ImageHandle, IndexKind, IndexMap, IndexStats, ToolFailure};

/// Multispectral raster with named reflectance bands, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImage")]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub bands: BTreeMap<String, Vec<Vec<f64>>>,
    pub acquired: DateTime<Utc>,
    pub location: GeoPoint,
    pub pixel_size_m: f64,
}

#[derive(Deserialize)]
struct RawImage {
    width: usize,
    height: usize,
    bands: BTreeMap<String, Vec<Vec<f64>>>,
    acquired: DateTime<Utc>,
    location: GeoPoint,
    pixel_size_m: f64,
}

impl TryFrom<RawImage> for RasterImage {
    type Error = String;

    fn try_from(r: RawImage) -> Result<Self, Self::Error> {
        RasterImage::new(r.width, r.height, r.bands, r.acquired, r.location, r.pixel_size_m)
    }
}

impl RasterImage {
    pub fn new(
        width: usize,
        height: usize,
        bands: BTreeMap<String, Vec<Vec<f64>>>,
        acquired: DateTime<Utc>,
        location: GeoPoint,
        pixel_size_m: f64,
    ) -> Result<Self, String> {
        if width == 0 || height == 0 {
            return Err("image must have at least one pixel".into());
        }
        if !(pixel_size_m > 0.0 && pixel_size_m.is_finite()) {
            return Err("pixel size must be positive".into());
        }
        for (name, rows) in &bands {
            if rows.len() != height || rows.iter().any(|r| r.len() != width) {
                return Err(format!("band {name} is not {width}x{height}"));
            }
            if rows.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("band {name} has reflectance outside [0, 1]"));
            }
        }
        Ok(Self { width, height, bands, acquired, location, pixel_size_m })
    }

    pub fn band(&self, name: &str) -> Result<&Vec<Vec<f64>>, ToolFailure> {
        self.bands
            .get(name)
            .ok_or_else(|| ToolFailure::new(FailureCode::MissingBand, format!("image has no `{name}` band")))
    }

    pub fn handle(&self, image_ref: &ImageRef) -> ImageHandle {
        ImageHandle {
            image_ref: image_ref.to_string(),
            width: self.width,
            height: self.height,
            bands: self.bands.keys().cloned().collect(),
            acquired: self.acquired,
            location: self.location,
            pixel_size_m: self.pixel_size_m,
        }
    }
}

/// Self-describing satellite image reference: `sat:<lat>,<lon>@<date>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageRef {
    pub point: GeoPoint,
    pub date: NaiveDate,
}

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sat:{:.4},{:.4}@{}", self.point.lat(), self.point.lon(), self.date.format("%Y-%m-%d"))
    }
}

impl FromStr for ImageRef {
    type Err = ToolFailure;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            ToolFailure::new(FailureCode::UnresolvableReference, format!("`{s}` is not a satellite image reference"))
        };
        let body = s.strip_prefix("sat:").ok_or_else(bad)?;
        let (coords, date) = body.split_once('@').ok_or_else(bad)?;
        let (lat, lon) = coords.split_once(',').ok_or_else(bad)?;
        let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
        let lon: f64 = lon.trim().parse().map_err(|_| bad())?;
        let point = GeoPoint::new(lat, lon).map_err(|_| bad())?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").map_err(|_| bad())?;
        Ok(Self { point, date })
    }
}

/// `(a - b) / (a + b)` per pixel; a zero denominator yields `None`.
pub fn normalized_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(x, y)| {
                    let den = x + y;
                    (den != 0.0).then(|| ((x - y) / den).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect()
}

fn index_stats(values: &[Vec<Option<f64>>]) -> (IndexStats, usize) {
    let total: usize = values.iter().map(Vec::len).sum();
    let valid: Vec<f64> = values.iter().flatten().flatten().copied().collect();
    let stats = match mean(&valid) {
        Some(m) => IndexStats {
            min: valid.iter().copied().fold(f64::INFINITY, f64::min),
            max: valid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: m,
            valid_fraction: valid.len() as f64 / total as f64,
        },
        None => IndexStats { min: 0.0, max: 0.0, mean: 0.0, valid_fraction: 0.0 },
    };
    (stats, valid.len())
}

fn index_map(kind: IndexKind, img: &RasterImage, a: &str, b: &str) -> Result<IndexMap, ToolFailure> {
    let values = normalized_difference(img.band(a)?, img.band(b)?);
    let (stats, _) = index_stats(&values);
    Ok(IndexMap { index_name: kind, width: img.width, height: img.height, values, stats })
}

pub fn ndvi(img: &RasterImage) -> Result<IndexMap, ToolFailure> {
    index_map(IndexKind::Ndvi, img, "nir", "red")
}

pub fn ndwi(img: &RasterImage) -> Result<IndexMap, ToolFailure> {
    index_map(IndexKind::Ndwi, img, "green", "nir")
}

/// NDVI change from `before` to `after`; pixels with a delta below
/// `threshold` count as degraded.
pub fn desertification(before: &RasterImage, after: &RasterImage, threshold: f64) -> Result<ChangeReport, ToolFailure> {
    if before.width != after.width || before.height != after.height {
        return Err(ToolFailure::new(
            FailureCode::ShapeMismatch,
            format!("{}x{} vs {}x{}", before.width, before.height, after.width, after.height),
        ));
    }
    if before.location != after.location {
        return Err(ToolFailure::new(FailureCode::ShapeMismatch, "images cover different locations"));
    }
    let (n1, n2) = (ndvi(before)?, ndvi(after)?);
    let delta_map: Vec<Vec<Option<f64>>> = n1
        .values
        .iter()
        .zip(&n2.values)
        .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| Some(b.as_ref()? - a.as_ref()?)).collect())
        .collect();
    let deltas: Vec<f64> = delta_map.iter().flatten().flatten().copied().collect();
    let degraded = deltas.iter().filter(|d| **d < threshold).count();
    Ok(ChangeReport {
        width: before.width,
        height: before.height,
        mean_ndvi_delta: mean(&deltas).unwrap_or(0.0),
        degraded_area_fraction: if deltas.is_empty() { 0.0 } else { degraded as f64 / deltas.len() as f64 },
        degradation_threshold: threshold,
        valid_pixels: deltas.len(),
        delta_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn image(red: f64, green: f64, nir: f64, w: usize, h: usize) -> RasterImage {
        let plane = |v: f64| vec![vec![v; w]; h];
        let bands =
            BTreeMap::from([("red".into(), plane(red)), ("green".into(), plane(green)), ("nir".into(), plane(nir))]);
        RasterImage::new(
            w,
            h,
            bands,
            Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap(),
            GeoPoint::new(24.2, 55.7).unwrap(),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn hand_evaluated_pixel() {
        let m = ndvi(&image(0.1, 0.2, 0.5, 1, 1)).unwrap();
        assert!((m.values[0][0].unwrap() - 0.4 / 0.6).abs() < 1e-12);
        let w = ndwi(&image(0.1, 0.2, 0.5, 1, 1)).unwrap();
        assert!((w.values[0][0].unwrap() - (-0.3 / 0.7)).abs() < 1e-12);
    }

    #[test]
    fn equal_bands_give_zero_and_dark_pixels_are_invalid() {
        let m = ndvi(&image(0.3, 0.3, 0.3, 4, 4)).unwrap();
        assert!(m.values.iter().flatten().all(|v| *v == Some(0.0)));
        let mut img = image(0.1, 0.2, 0.5, 2, 2);
        img.bands.get_mut("red").unwrap()[0][0] = 0.0;
        img.bands.get_mut("nir").unwrap()[0][0] = 0.0;
        let m = ndvi(&img).unwrap();
        assert_eq!(m.values[0][0], None);
        assert_eq!(m.stats.valid_fraction, 0.75);
        assert!((m.stats.mean - 0.4 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn missing_band_and_shape_mismatch() {
        let mut img = image(0.1, 0.2, 0.5, 2, 2);
        img.bands.remove("green");
        assert_eq!(ndwi(&img).unwrap_err().code, FailureCode::MissingBand);
        let e = desertification(&image(0.1, 0.2, 0.5, 4, 4), &image(0.1, 0.2, 0.5, 5, 5), -0.1).unwrap_err();
        assert_eq!(e.code, FailureCode::ShapeMismatch);
    }

    #[test]
    fn vegetation_to_bare_soil_is_fully_degraded() {
        let green = image(0.05, 0.1, 0.6, 4, 4);
        let bare = image(0.3, 0.3, 0.32, 4, 4);
        let r = desertification(&green, &bare, -0.1).unwrap();
        assert_eq!(r.degraded_area_fraction, 1.0);
        let same = desertification(&green, &green, -0.1).unwrap();
        assert_eq!(same.degraded_area_fraction, 0.0);
        assert!(same.delta_map.iter().flatten().all(|d| *d == Some(0.0)));
    }

    #[test]
    fn image_refs_round_trip() {
        let r: ImageRef = "sat:24.2075,55.7447@2023-01-15".parse().unwrap();
        assert_eq!(r.to_string(), "sat:24.2075,55.7447@2023-01-15");
        assert!("img:oryx".parse::<ImageRef>().is_err());
    }

    #[test]
    fn reflectance_outside_unit_interval_is_rejected() {
        let bands = BTreeMap::from([("red".to_string(), vec![vec![1.5]])]);
        let t = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        assert!(RasterImage::new(1, 1, bands, t, GeoPoint::new(0.0, 0.0).unwrap(), 10.0).is_err());
    }
}
