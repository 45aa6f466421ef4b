use serde::{Deserialize, Serialize};

use super::GeoError;
use crate::canon::GeoPoint;

pub const GULF_COUNTRIES: [&str; 6] = ["Bahrain", "Kuwait", "Oman", "Qatar", "Saudi Arabia", "UAE"];
const BUILTIN_CITIES: &str = include_str!("../../config/cities.csv");

/// Similarity floor for fuzzy name matches.
pub const MATCH_FLOOR: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub const GULF: BoundingBox = BoundingBox { min_lat: 12.0, max_lat: 33.0, min_lon: 34.0, max_lon: 60.0 };

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat()) && (self.min_lon..=self.max_lon).contains(&p.lon())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub name: String,
    pub country: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityMatch {
    pub city: City,
    /// 1.0 for an exact (normalized) match.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CityInventory {
    cities: Vec<City>,
    bbox: BoundingBox,
}

#[derive(Deserialize)]
struct CityRow {
    name: String,
    country: String,
    lat: f64,
    lon: f64,
}

pub fn normalize_name(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl CityInventory {
    pub fn new(cities: Vec<City>, bbox: BoundingBox) -> Result<Self, GeoError> {
        for (idx, c) in cities.iter().enumerate() {
            if !GULF_COUNTRIES.contains(&c.country.as_str()) {
                return Err(GeoError::Inventory(format!("{}: unknown country {}", c.name, c.country)));
            }
            if !bbox.contains(c.point) {
                return Err(GeoError::Inventory(format!("{} lies outside the bounding box", c.name)));
            }
            let key = normalize_name(&c.name);
            if cities[..idx].iter().any(|o| o.country == c.country && normalize_name(&o.name) == key) {
                return Err(GeoError::Inventory(format!("{} listed twice for {}", c.name, c.country)));
            }
        }
        Ok(Self { cities, bbox })
    }

    pub fn from_csv(text: &str, bbox: BoundingBox) -> Result<Self, GeoError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut cities = Vec::new();
        for row in rdr.deserialize::<CityRow>() {
            let row = row.map_err(|e| GeoError::Inventory(e.to_string()))?;
            let point = GeoPoint::new(row.lat, row.lon).map_err(|e| GeoError::Inventory(e.to_string()))?;
            cities.push(City { name: row.name, country: row.country, point });
        }
        Self::new(cities, bbox)
    }

    pub fn builtin() -> Self {
        Self::from_csv(BUILTIN_CITIES, BoundingBox::GULF).expect("builtin city inventory is valid")
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// Resolves a free-form region name. Accepts an optional `, country`
    /// suffix and tolerates small spelling differences.
    pub fn lookup(&self, region: &str) -> Result<CityMatch, GeoError> {
        let norm = normalize_name(region);
        if norm.is_empty() {
            return Err(GeoError::UnknownRegion(region.to_string()));
        }
        let (name, country) = match norm.rsplit_once(',') {
            Some((n, c)) => (n.trim().to_string(), Some(c.trim().to_string())),
            None => (norm.clone(), None),
        };
        let eligible = |c: &&City| country.as_deref().is_none_or(|k| normalize_name(&c.country) == k);
        if let Some(c) = self.cities.iter().filter(eligible).find(|c| normalize_name(&c.name) == name) {
            return Ok(CityMatch { city: c.clone(), similarity: 1.0 });
        }
        let mut best: Option<(f64, &City)> = None;
        for c in self.cities.iter().filter(eligible) {
            let sim = strsim::jaro_winkler(&normalize_name(&c.name), &name);
            if best.is_none_or(|(b, _)| sim > b) {
                best = Some((sim, c));
            }
        }
        match best {
            Some((sim, c)) if sim >= MATCH_FLOOR => Ok(CityMatch { city: c.clone(), similarity: sim }),
            _ => Err(GeoError::UnknownRegion(region.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doha_variants_resolve_to_the_same_point() {
        let inv = CityInventory::builtin();
        let a = inv.lookup("Doha").unwrap();
        assert_eq!((a.city.point.lat(), a.city.point.lon()), (25.2854, 51.5310));
        assert_eq!(a.city.country, "Qatar");
        for v in ["doha ", "  DOHA", "Doha, Qatar", "Dohha"] {
            assert_eq!(inv.lookup(v).unwrap().city.point, a.city.point, "{v}");
        }
    }

    #[test]
    fn unknown_places_are_rejected() {
        let inv = CityInventory::builtin();
        assert!(matches!(inv.lookup("Atlantis"), Err(GeoError::UnknownRegion(_))));
        assert!(inv.lookup("").is_err());
        assert!(inv.lookup("Doha, Oman").is_err());
    }

    #[test]
    fn inventory_rejects_points_outside_the_box() {
        let far = City { name: "Oslo".into(), country: "Oman".into(), point: GeoPoint::new(59.9, 10.7).unwrap() };
        assert!(CityInventory::new(vec![far], BoundingBox::GULF).is_err());
    }
}
