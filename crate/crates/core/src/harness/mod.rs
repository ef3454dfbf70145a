//! Scene files, the seeded benchmark runner and its reports.

mod bench;
mod scene;

pub use bench::{
    emit_report, prepare, run_benchmark, run_planner, summarize, trial_seeds, BenchOptions, PlannerKind, Prepared,
    ReportFormat, RunRecord, Summary,
};
pub use scene::{load_scene, parse_scene, EndpointSpec, PlacementSpec, Scene, SceneFile};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
}
