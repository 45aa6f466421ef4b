use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CanonError, GeoPoint, UnitTable};

/// One unit- and time-normalized observation. `value: None` marks an explicit gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRecord {
    pub timestamp: DateTime<Utc>,
    pub variable: String,
    pub value: Option<f64>,
    pub unit: String,
    pub location: GeoPoint,
    pub city: Option<String>,
    pub source: String,
}

/// Time-ordered records for a single (variable, unit, location).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CanonicalRecord>", into = "Vec<CanonicalRecord>")]
pub struct CanonicalSeries {
    records: Vec<CanonicalRecord>,
}

impl TryFrom<Vec<CanonicalRecord>> for CanonicalSeries {
    type Error = CanonError;

    fn try_from(records: Vec<CanonicalRecord>) -> Result<Self, Self::Error> {
        CanonicalSeries::new(records, UnitTable::builtin())
    }
}

impl From<CanonicalSeries> for Vec<CanonicalRecord> {
    fn from(s: CanonicalSeries) -> Self {
        s.records
    }
}

impl CanonicalSeries {
    pub fn new(records: Vec<CanonicalRecord>, units: &UnitTable) -> Result<Self, CanonError> {
        if let Some(first) = records.first() {
            if !units.is_canonical(&first.variable, &first.unit) {
                return Err(CanonError::NonCanonicalUnit {
                    variable: first.variable.clone(),
                    unit: first.unit.clone(),
                });
            }
        }
        for (idx, r) in records.iter().enumerate() {
            if let Some(v) = r.value {
                if !v.is_finite() {
                    return Err(CanonError::InvalidSeries(format!("record {idx} has non-finite value")));
                }
            }
        }
        for (idx, pair) in records.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.timestamp <= a.timestamp {
                return Err(CanonError::OutOfOrder { index: idx + 1 });
            }
            if a.variable != b.variable || a.unit != b.unit || a.location != b.location {
                return Err(CanonError::InvalidSeries(format!(
                    "record {} differs in variable, unit or location",
                    idx + 1
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn empty() -> Self {
        Self { records: Vec::new() }
    }

    pub fn records(&self) -> &[CanonicalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn variable(&self) -> Option<&str> {
        self.records.first().map(|r| r.variable.as_str())
    }

    pub fn unit(&self) -> Option<&str> {
        self.records.first().map(|r| r.unit.as_str())
    }

    /// Sub-series with timestamps in `[start, end)`.
    pub fn slice(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> CanonicalSeries {
        let records = self.records.iter().filter(|r| r.timestamp >= start && r.timestamp < end).cloned().collect();
        CanonicalSeries { records }
    }

    /// (timestamp, value) pairs for non-missing records.
    pub fn observed(&self) -> impl Iterator<Item = (DateTime<Utc>, f64)> + '_ {
        self.records.iter().filter_map(|r| r.value.map(|v| (r.timestamp, v)))
    }

    pub fn into_records(self) -> Vec<CanonicalRecord> {
        self.records
    }
}

/// Where a document or derived artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub organization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<chrono::NaiveDate>,
    pub query: String,
    pub retrieved_at: DateTime<Utc>,
}

impl Provenance {
    pub fn new(
        url: Option<String>,
        title: Option<String>,
        query: impl Into<String>,
        retrieved_at: DateTime<Utc>,
    ) -> Result<Self, CanonError> {
        if url.is_none() && title.is_none() {
            return Err(CanonError::InvalidProvenance);
        }
        Ok(Self { url, title, organization: None, published: None, query: query.into(), retrieved_at })
    }

    pub fn is_valid(&self) -> bool {
        self.url.as_deref().is_some_and(|u| !u.is_empty()) || self.title.as_deref().is_some_and(|t| !t.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn rec(day: u32, value: Option<f64>) -> CanonicalRecord {
        CanonicalRecord {
            timestamp: Utc.with_ymd_and_hms(2023, 4, day, 0, 0, 0).unwrap(),
            variable: "precipitation".into(),
            value,
            unit: "mm".into(),
            location: GeoPoint::new(25.2854, 51.531).unwrap(),
            city: Some("Doha".into()),
            source: "fixture".into(),
        }
    }

    #[test]
    fn rejects_out_of_order() {
        let err = CanonicalSeries::new(vec![rec(2, None), rec(1, Some(1.0))], UnitTable::builtin());
        assert!(matches!(err, Err(CanonError::OutOfOrder { index: 1 })));
        let dup = CanonicalSeries::new(vec![rec(2, None), rec(2, Some(1.0))], UnitTable::builtin());
        assert!(dup.is_err());
    }

    #[test]
    fn rejects_non_canonical_unit() {
        let mut r = rec(1, Some(0.001));
        r.unit = "m".into();
        assert!(matches!(
            CanonicalSeries::new(vec![r], UnitTable::builtin()),
            Err(CanonError::NonCanonicalUnit { .. })
        ));
    }

    #[test]
    fn rejects_mixed_location() {
        let mut b = rec(2, Some(1.0));
        b.location = GeoPoint::new(24.0, 54.0).unwrap();
        assert!(CanonicalSeries::new(vec![rec(1, None), b], UnitTable::builtin()).is_err());
    }

    #[test]
    fn provenance_needs_url_or_title() {
        let t = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        assert!(Provenance::new(None, None, "q", t).is_err());
        assert!(Provenance::new(None, Some("Plan".into()), "q", t).is_ok());
    }
}
