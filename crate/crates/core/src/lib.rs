//! Evidential road-grid mapping from classified LIDAR point clouds.
//!
//! The crate turns per-point road/not-road classifier outputs into
//! Dempster-Shafer mass functions ([`belief`], [`glr`]), accumulates them in a
//! 2D grid anchored to the sensor ([`grid`]), flags moving obstacles through
//! conflict analysis between consecutive grids, and scores the accumulated map
//! against a vector ground-truth map ([`metrics`]). Training data for the
//! classifier comes from automatic soft labelling of scans against the same
//! vector maps ([`label`]), and a synthetic LIDAR world ([`sim`]) exercises the
//! whole pipeline end to end without real sensor data.

pub mod belief;
pub mod geom;
pub mod glr;
pub mod grid;
pub mod label;
pub mod metrics;
pub mod odometry;
pub mod scan;
pub mod sim;
pub mod vecmap;

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A mass function failed validation (negative component or bad sum).
    #[error("invalid mass function: {0}")]
    InvalidMass(String),
    /// Dempster combination of totally conflicting evidence (K = 1).
    #[error("total conflict: combined evidence has no common support")]
    TotalConflict,
    /// Commonality values that do not invert to a nonnegative mass function.
    #[error("inconsistent commonalities: {0}")]
    InconsistentCommonality(String),
    /// Vector or grid dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// Input data is structurally valid but unusable (e.g. single-class
    /// training set, zero-variance correlation operand).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A measurement arrived with a timestamp older than the filter state.
    #[error("non-monotone timestamp: {0}")]
    NonMonotoneTimestamp(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    /// A file did not match its documented format.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
