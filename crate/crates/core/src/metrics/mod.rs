//! Toolpath representation and the quality metrics reported before and
//! after resampling.

mod compare;
mod path;
mod toolpath;

use thiserror::Error;

pub use compare::{compare, ratio_percent, ComparisonReport, ComparisonRow, DeviationStats, EnergyStats, RunSummary};
pub use path::{
    chord_errors, normalized_height, path_lengths, path_metrics, triple_chord_error, turning_angles, ChordErrors,
    PathLengths, PathMetrics, TurningAngles,
};
pub use toolpath::{from_polyline, Layer, PathSegment, Role, TaggedPoint, Toolpath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid toolpath: {0}")]
    InvalidToolpath(String),
    #[error("toolpath JSON: {0}")]
    Json(String),
    #[error("CSV output: {0}")]
    Csv(String),
}

impl From<csv::Error> for MetricsError {
    fn from(e: csv::Error) -> Self {
        MetricsError::Csv(e.to_string())
    }
}
