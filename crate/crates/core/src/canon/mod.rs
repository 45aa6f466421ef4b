//! Shared domain types: coordinates, grids, canonical units and timestamps,
//! and the universal CSV row format every pipeline writes.

mod csvio;
mod geo;
mod series;
mod time;
mod units;

pub use csvio::{canonical_csv_string, read_canonical_csv, write_canonical_csv, CANONICAL_HEADER};
pub use geo::{GeoPoint, GridSpec};
pub use series::{CanonicalRecord, CanonicalSeries, Provenance};
pub use time::{date_start, format_timestamp, normalize_timestamp, parse_date, Zone};
pub use units::{normalize_unit, UnitTable};

#[derive(Debug, thiserror::Error)]
pub enum CanonError {
    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidPoint { lat: f64, lon: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown unit `{unit}` for variable `{variable}`")]
    UnknownUnit { variable: String, unit: String },
    #[error("unit `{unit}` is not canonical for `{variable}`")]
    NonCanonicalUnit { variable: String, unit: String },
    #[error("unit table line {line}: {message}")]
    UnitTable { line: usize, message: String },
    #[error("unparseable timestamp `{0}`")]
    UnparseableTimestamp(String),
    #[error("unknown time zone `{0}`")]
    UnknownZone(String),
    #[error("timestamps not strictly increasing at record {index}")]
    OutOfOrder { index: usize },
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("provenance needs a url or a title")]
    InvalidProvenance,
    #[error("csv row {row}: {message}")]
    CsvParse { row: usize, message: String },
    #[error("sink failure: {0}")]
    SinkFailure(String),
}
