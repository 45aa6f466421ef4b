//! Canonical unit table and affine conversions.
//!
//! The table is a plain-text file with one `variable,unit,factor,offset`
//! entry per line; `canonical = value * factor + offset`. The first entry
//! of each variable is its canonical unit and must be the identity.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::CanonError;

const DEFAULT_TABLE: &str = include_str!("../../config/units.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine {
    factor: f64,
    offset: f64,
}

#[derive(Debug, Clone)]
struct VariableUnits {
    canonical: String,
    conversions: BTreeMap<String, Affine>,
}

#[derive(Debug, Clone)]
pub struct UnitTable {
    variables: BTreeMap<String, VariableUnits>,
}

impl UnitTable {
    pub fn parse(text: &str) -> Result<Self, CanonError> {
        let mut variables: BTreeMap<String, VariableUnits> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| CanonError::UnitTable { line: lineno + 1, message: msg.to_string() };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad("expected variable,unit,factor,offset"));
            }
            let factor: f64 = fields[2].parse().map_err(|_| bad("factor is not a number"))?;
            let offset: f64 = fields[3].parse().map_err(|_| bad("offset is not a number"))?;
            if !factor.is_finite() || factor == 0.0 || !offset.is_finite() {
                return Err(bad("factor must be finite and non-zero"));
            }
            let (variable, unit) = (fields[0].to_string(), fields[1].to_string());
            let entry = variables
                .entry(variable)
                .or_insert_with(|| VariableUnits { canonical: unit.clone(), conversions: BTreeMap::new() });
            if entry.conversions.is_empty() && (factor != 1.0 || offset != 0.0) {
                return Err(bad("canonical unit must have factor 1 and offset 0"));
            }
            if entry.conversions.insert(unit, Affine { factor, offset }).is_some() {
                return Err(bad("duplicate unit for variable"));
            }
        }
        Ok(Self { variables })
    }

    /// The table shipped with the crate.
    pub fn builtin() -> &'static UnitTable {
        static TABLE: OnceLock<UnitTable> = OnceLock::new();
        TABLE.get_or_init(|| UnitTable::parse(DEFAULT_TABLE).expect("builtin unit table parses"))
    }

    pub fn canonical_unit(&self, variable: &str) -> Result<&str, CanonError> {
        self.variables
            .get(variable)
            .map(|v| v.canonical.as_str())
            .ok_or_else(|| CanonError::UnknownVariable(variable.to_string()))
    }

    pub fn is_canonical(&self, variable: &str, unit: &str) -> bool {
        self.canonical_unit(variable).map(|u| u == unit).unwrap_or(false)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.variables.keys().map(String::as_str)
    }

    pub fn units_of(&self, variable: &str) -> Vec<&str> {
        self.variables.get(variable).map(|v| v.conversions.keys().map(String::as_str).collect()).unwrap_or_default()
    }

    fn affine(&self, variable: &str, unit: &str) -> Result<(Affine, &str), CanonError> {
        let units = self.variables.get(variable).ok_or_else(|| CanonError::UnknownVariable(variable.to_string()))?;
        let affine = units
            .conversions
            .get(unit)
            .ok_or_else(|| CanonError::UnknownUnit { variable: variable.to_string(), unit: unit.to_string() })?;
        Ok((*affine, units.canonical.as_str()))
    }

    /// Converts `value` expressed in `from_unit` into the variable's canonical unit.
    pub fn normalize(&self, value: f64, from_unit: &str, variable: &str) -> Result<(f64, &str), CanonError> {
        let (a, canonical) = self.affine(variable, from_unit)?;
        if a.factor == 1.0 && a.offset == 0.0 {
            return Ok((value, canonical));
        }
        Ok((value * a.factor + a.offset, canonical))
    }

    /// Inverse of [`UnitTable::normalize`].
    pub fn denormalize(&self, value: f64, to_unit: &str, variable: &str) -> Result<f64, CanonError> {
        let (a, _) = self.affine(variable, to_unit)?;
        if a.factor == 1.0 && a.offset == 0.0 {
            return Ok(value);
        }
        Ok((value - a.offset) / a.factor)
    }

    /// Scale factor for differences (std, slopes) when converting from `from_unit`.
    pub fn scale(&self, from_unit: &str, variable: &str) -> Result<f64, CanonError> {
        Ok(self.affine(variable, from_unit)?.0.factor)
    }
}

/// Converts with the builtin table.
pub fn normalize_unit(value: f64, from_unit: &str, variable: &str) -> Result<(f64, String), CanonError> {
    UnitTable::builtin().normalize(value, from_unit, variable).map(|(v, u)| (v, u.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kelvin_to_celsius() {
        let (v, u) = normalize_unit(300.0, "K", "temperature").unwrap();
        assert!((v - 26.85).abs() < 1e-9);
        assert_eq!(u, "°C");
    }

    #[test]
    fn metres_to_millimetres() {
        assert_eq!(normalize_unit(1.0, "m", "precipitation").unwrap(), (1000.0, "mm".to_string()));
        assert_eq!(normalize_unit(5.0, "mm", "precipitation").unwrap(), (5.0, "mm".to_string()));
    }

    #[test]
    fn unknown_unit_and_variable() {
        assert!(matches!(normalize_unit(1.0, "furlong", "precipitation"), Err(CanonError::UnknownUnit { .. })));
        assert!(matches!(normalize_unit(1.0, "mm", "snowfall_depth"), Err(CanonError::UnknownVariable(_))));
    }

    #[test]
    fn every_conversion_inverts() {
        let table = UnitTable::builtin();
        for var in table.variables() {
            for unit in table.units_of(var) {
                for v in [-40.0, 0.0, 1.5, 300.0, 12345.678] {
                    let (c, _) = table.normalize(v, unit, var).unwrap();
                    let back = table.denormalize(c, unit, var).unwrap();
                    let rel = (back - v).abs() / v.abs().max(1.0);
                    assert!(rel < 1e-9, "{var} {unit} {v} -> {c} -> {back}");
                }
            }
        }
    }

    #[test]
    fn rejects_non_identity_canonical() {
        assert!(UnitTable::parse("temperature,K,1,-273.15\n").is_err());
        assert!(UnitTable::parse("temperature,°C,1\n").is_err());
    }
}
