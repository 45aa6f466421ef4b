//! Visual-QA dataset pipeline: city lookup, nearest grid cell, windowing,
//! chart rendering and chart-grounded question generation.

mod chart;
mod cities;
mod grid;
mod gridded;
mod visual_qa;
mod windows;

pub use chart::{
    build_chart, slug, window_stats, ChartArtifact, ChartFiles, ChartMetadata, CANVAS_HEIGHT, CANVAS_WIDTH,
    METADATA_HEADER,
};
pub use cities::{normalize_name, BoundingBox, City, CityInventory, CityMatch, GULF_COUNTRIES, MATCH_FLOOR};
pub use grid::{
    distance_km, nearest_grid_cell, nearest_masked_cell, point_distance_km, DistanceMetric, EARTH_RADIUS_KM,
};
pub use gridded::{GriddedProduct, GriddedVariable, GRIDDED_MAGIC};
pub use visual_qa::{
    anomaly_items, forge_visual, imputation_items, visual_items_for_chart, ChartItems, VisualConfig, VisualForgeOutput,
    IMPUTATION_SPAN, SPIKE_SIGMAS,
};
pub use windows::{modal_cadence, segment_windows, WindowSpec, DEFAULT_DELTA_DAYS, DEFAULT_RHO, TRAILING_YEARS};

use crate::canon::CanonError;

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("city inventory: {0}")]
    Inventory(String),
    #[error("gridded product line {line}: {message}")]
    Gridded { line: usize, message: String },
    #[error("cell ({i}, {j}) is outside the grid")]
    CellOutOfRange { i: usize, j: usize },
    #[error("variable `{0}` is not present")]
    VariableAbsent(String),
    #[error("slice extends beyond its window")]
    SliceOutsideWindow,
    #[error("slice has no observed values")]
    EmptySlice,
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Backend(#[from] crate::llm::BackendError),
}
