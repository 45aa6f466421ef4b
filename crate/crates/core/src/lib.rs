//! Tool-augmented climate agent for Gulf-region questions.
//!
//! The crate bundles the typed tool layer ([`toolkit`], [`tools`]), the
//! act/observe/reason loop ([`agent`]), the gold-trace benchmark harness
//! ([`eval`]), and the two dataset pipelines ([`textforge`], [`geoforge`]).
//! Everything is synchronous; types are `Send + Sync` so callers can fan
//! out independent runs.

pub mod agent;
pub mod canon;
pub mod clock;
pub mod eval;
pub mod geoforge;
pub mod llm;
pub mod stats;
pub mod textforge;
pub mod toolkit;
pub mod tools;

#[cfg(test)]
mod testutil;

pub use canon::{CanonError, CanonicalRecord, CanonicalSeries, GeoPoint, GridSpec, Provenance, UnitTable};
