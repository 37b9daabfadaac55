//! Statistics, parameter sweeps, comparisons and exports.

pub mod backup;
pub mod geojson;
pub mod heli;
pub mod mmss;
pub mod stats;
pub mod sweep;
pub mod table;

use thiserror::Error;

pub use backup::{backup_compare, BackupRow};
pub use geojson::{classify, export_geojson, Thresholds};
pub use heli::{heli_compare, ratio_percent, ComparisonRow, HeliRecord};
pub use mmss::{format_mmss, parse_mmss};
pub use stats::{stats, Stats};
pub use sweep::{sweep_s, sweep_tmax, tmax_grid, RowStatus, StatsRow, SweepKey};

use crate::model::ModelError;
use crate::solver::SolveError;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("statistics of an empty list")]
    EmptyList,
    #[error("`{0}` is not a mm:ss duration")]
    Mmss(String),
    #[error("record {record} lies outside the terrain coverage")]
    OutOfCoverage { record: usize },
    #[error("no stations to fly from")]
    NoStations,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Solve(SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<SolveError> for ReportError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => ReportError::Model(m),
            other => ReportError::Solve(other),
        }
    }
}
