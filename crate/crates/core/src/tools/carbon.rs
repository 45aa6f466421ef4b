use std::collections::BTreeMap;

use serde::Deserialize;

use crate::toolkit::{FailureCode, ToolFailure};

/// Emission factors in tCO2e per unit of revenue, keyed by (country, industry, year).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmissionFactorTable {
    entries: BTreeMap<(String, String, i64), f64>,
}

#[derive(Deserialize)]
struct FactorRow {
    country: String,
    industry: String,
    year: i64,
    factor: f64,
}

fn key_part(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

impl EmissionFactorTable {
    pub fn insert(&mut self, country: &str, industry: &str, year: i64, factor: f64) -> Result<(), String> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(format!("factor for {country}/{industry}/{year} must be positive"));
        }
        self.entries.insert((key_part(country), key_part(industry), year), factor);
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut table = Self::default();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for row in rdr.deserialize::<FactorRow>() {
            let row = row.map_err(|e| e.to_string())?;
            table.insert(&row.country, &row.industry, row.year, row.factor)?;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn factor(&self, country: &str, industry: &str, year: i64) -> Result<f64, ToolFailure> {
        self.entries.get(&(key_part(country), key_part(industry), year)).copied().ok_or_else(|| {
            ToolFailure::new(
                FailureCode::UnknownFactorKey,
                format!("no emission factor for {country}/{industry}/{year}"),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_normalized() {
        let t = EmissionFactorTable::from_csv("country,industry,year,factor\nQatar,oil and gas,2022,0.5\n").unwrap();
        assert_eq!(t.factor("qatar", "Oil_and_Gas", 2022).unwrap(), 0.5);
        assert_eq!(t.factor("Qatar", "oil and gas", 2021).unwrap_err().code, FailureCode::UnknownFactorKey);
        assert!(EmissionFactorTable::from_csv("country,industry,year,factor\nA,b,2020,0\n").is_err());
    }
}
