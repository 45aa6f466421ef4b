use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::payload::{FailureCode, ToolFailure};
use super::signature::{is_identifier, ParamSpec, ParamType};
use super::{ToolCall, ToolRegistry};
use crate::canon::GeoPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ArgValue {
    Real(f64),
    Integer(i64),
    Text(String),
    Date(NaiveDate),
    Point(GeoPoint),
    ImageRef(String),
    AudioRef(String),
    SeriesRef(String),
}

/// Arguments after schema validation and coercion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypedArgs(BTreeMap<String, ArgValue>);

fn missing(name: &str) -> ToolFailure {
    ToolFailure::new(FailureCode::ArgError, format!("argument `{name}` missing or mistyped"))
}

impl TypedArgs {
    pub fn get(&self, name: &str) -> Option<&ArgValue> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: &str, value: ArgValue) {
        self.0.insert(name.to_string(), value);
    }

    pub fn real(&self, name: &str) -> Result<f64, ToolFailure> {
        match self.0.get(name) {
            Some(ArgValue::Real(v)) => Ok(*v),
            Some(ArgValue::Integer(v)) => Ok(*v as f64),
            _ => Err(missing(name)),
        }
    }

    pub fn integer(&self, name: &str) -> Result<i64, ToolFailure> {
        match self.0.get(name) {
            Some(ArgValue::Integer(v)) => Ok(*v),
            _ => Err(missing(name)),
        }
    }

    pub fn opt_integer(&self, name: &str) -> Option<i64> {
        self.integer(name).ok()
    }

    pub fn text(&self, name: &str) -> Result<&str, ToolFailure> {
        match self.0.get(name) {
            Some(ArgValue::Text(s) | ArgValue::ImageRef(s) | ArgValue::AudioRef(s) | ArgValue::SeriesRef(s)) => Ok(s),
            _ => Err(missing(name)),
        }
    }

    pub fn date(&self, name: &str) -> Result<NaiveDate, ToolFailure> {
        match self.0.get(name) {
            Some(ArgValue::Date(d)) => Ok(*d),
            _ => Err(missing(name)),
        }
    }

    /// `lat`/`lon` pair as a point.
    pub fn lat_lon(&self) -> Result<GeoPoint, ToolFailure> {
        let (lat, lon) = (self.real("lat")?, self.real("lon")?);
        GeoPoint::new(lat, lon).map_err(|e| ToolFailure::new(FailureCode::ArgError, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ArgIssue {
    Missing { name: String },
    Unknown { name: String },
    Invalid { name: String, expected: ParamType, value: String },
    OutOfRange { name: String, value: f64 },
}

impl ArgIssue {
    pub fn describe(&self) -> String {
        match self {
            ArgIssue::Missing { name } => format!("missing: {name}"),
            ArgIssue::Unknown { name } => format!("unknown: {name}"),
            ArgIssue::Invalid { name, expected, value } => {
                format!("invalid: {name} (expected {expected}, got {value:?})")
            }
            ArgIssue::OutOfRange { name, value } => format!("out of range: {name} = {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok(TypedArgs),
    FormatError { reason: String },
    UnknownTool { tool: String },
    ArgError { issues: Vec<ArgIssue> },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Ok(_) => "ok",
            Verdict::FormatError { .. } => "format_error",
            Verdict::UnknownTool { .. } => "unknown_tool",
            Verdict::ArgError { .. } => "arg_error",
        }
    }

    pub fn to_failure(&self) -> Option<ToolFailure> {
        match self {
            Verdict::Ok(_) => None,
            Verdict::FormatError { reason } => Some(ToolFailure::new(FailureCode::FormatError, reason.clone())),
            Verdict::UnknownTool { tool } => {
                Some(ToolFailure::new(FailureCode::UnknownTool, format!("no tool named `{tool}`")))
            }
            Verdict::ArgError { issues } => Some(ToolFailure::new(
                FailureCode::ArgError,
                issues.iter().map(ArgIssue::describe).collect::<Vec<_>>().join("; "),
            )),
        }
    }
}

fn coerce(spec: &ParamSpec, raw: &str) -> Result<ArgValue, ArgIssue> {
    let invalid = || ArgIssue::Invalid { name: spec.name.clone(), expected: spec.ty, value: raw.to_string() };
    let s = raw.trim();
    let value = match spec.ty {
        ParamType::Real => {
            let v: f64 = s.parse().map_err(|_| invalid())?;
            if !v.is_finite() {
                return Err(invalid());
            }
            ArgValue::Real(v)
        }
        ParamType::Integer => match s.parse::<i64>() {
            Ok(v) => ArgValue::Integer(v),
            Err(_) => {
                let v: f64 = s.parse().map_err(|_| invalid())?;
                if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 {
                    ArgValue::Integer(v as i64)
                } else {
                    return Err(invalid());
                }
            }
        },
        ParamType::String => {
            if s.is_empty() {
                return Err(invalid());
            }
            ArgValue::Text(raw.to_string())
        }
        ParamType::Date => ArgValue::Date(NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| invalid())?),
        ParamType::Geopoint => {
            let (lat, lon) = s.split_once(',').ok_or_else(invalid)?;
            let lat: f64 = lat.trim().parse().map_err(|_| invalid())?;
            let lon: f64 = lon.trim().parse().map_err(|_| invalid())?;
            ArgValue::Point(GeoPoint::new(lat, lon).map_err(|_| invalid())?)
        }
        ParamType::ImageRef | ParamType::AudioRef | ParamType::SeriesRef => {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(invalid());
            }
            match spec.ty {
                ParamType::ImageRef => ArgValue::ImageRef(s.to_string()),
                ParamType::AudioRef => ArgValue::AudioRef(s.to_string()),
                _ => ArgValue::SeriesRef(s.to_string()),
            }
        }
    };
    let numeric = match value {
        ArgValue::Real(v) => Some(v),
        ArgValue::Integer(v) => Some(v as f64),
        _ => None,
    };
    if let Some(v) = numeric {
        if spec.min.is_some_and(|m| v < m) || spec.max.is_some_and(|m| v > m) {
            return Err(ArgIssue::OutOfRange { name: spec.name.clone(), value: v });
        }
    }
    Ok(value)
}

/// Total check of a call against the registry; every input maps to exactly one verdict.
pub fn validate_call(call: &ToolCall, registry: &ToolRegistry) -> Verdict {
    if !is_identifier(&call.tool) {
        return Verdict::FormatError { reason: format!("`{}` is not a tool identifier", call.tool) };
    }
    let Some(sig) = registry.signature(&call.tool) else {
        return Verdict::UnknownTool { tool: call.tool.clone() };
    };
    let mut issues = Vec::new();
    let mut typed = TypedArgs::default();
    for spec in &sig.params {
        match call.args.get(&spec.name) {
            None if spec.required => issues.push(ArgIssue::Missing { name: spec.name.clone() }),
            None => {}
            Some(raw) => match coerce(spec, raw) {
                Ok(v) => typed.insert(&spec.name, v),
                Err(issue) => issues.push(issue),
            },
        }
    }
    for name in call.args.keys() {
        if sig.param(name).is_none() {
            issues.push(ArgIssue::Unknown { name: name.clone() });
        }
    }
    if issues.is_empty() {
        Verdict::Ok(typed)
    } else {
        Verdict::ArgError { issues }
    }
}
