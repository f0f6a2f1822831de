//! Scaling studies for the GDSW preconditioner: sweeps, reports and a
//! condition-number bound check.

pub mod bound;
pub mod config;
pub mod report;
pub mod study;

use thiserror::Error;

pub use bound::{verify_bound, BoundPoint, BoundReport, BoundSweep};
pub use config::{
    AxisCounts, BoundaryKind, CoarseConfig, DecompositionConfig, OutputConfig, ProblemConfig, ReportFormat, RhsKind,
    RunConfig, SolverConfig,
};
pub use report::{emit_report, read_csv, read_json, sort_records};
pub use study::{run_point, run_study, PointSpec, RunRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("nothing to report")]
    EmptyReport,
    #[error(transparent)]
    Problem(#[from] gdsw_core::problems::ProblemError),
    #[error(transparent)]
    Partition(#[from] gdsw_core::partition::PartitionError),
    #[error(transparent)]
    Coarse(#[from] gdsw_core::coarse::CoarseError),
    #[error(transparent)]
    Precond(#[from] gdsw_core::precond::PrecondError),
    #[error(transparent)]
    Krylov(#[from] gdsw_core::krylov::KrylovError),
    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
