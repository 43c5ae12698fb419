//! File schemas shared by the command-line tool and the C interface:
//! optimization problem and report JSON, control schedule CSV, run manifests
//! and the public dataset manifest.

mod datasets;
mod manifest;
mod problem;
mod report;

pub use datasets::{data_dir, fetch_dataset, verify_dataset, DatasetCheck, DatasetEntry, DATA_DIR_ENV};
pub use manifest::RunManifest;
pub use problem::{
    Budget, ContinuousFile, GraphSpec, InitJson, InitialJson, LoadedContinuous, LoadedProblem, NodeProbability,
    ProblemFile, TargetJson,
};
pub use report::{
    read_schedule_csv, write_continuous_schedule_csv, write_continuous_trajectory_csv, write_schedule_csv,
    ContinuousReportJson, ReportJson, RunSummary, TargetValue,
};
