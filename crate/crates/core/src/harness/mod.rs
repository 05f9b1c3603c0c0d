//! Data ingestion, synthetic generators, experiment pipelines and reports.

pub mod experiment;
pub mod generate;
pub mod io;
pub mod report;

pub use experiment::{
    run_experiment, AlphaMode, Budget, BudgetBase, DatasetSource, ExperimentSpec, SketchFamily, TimingConfig,
    Variant,
};
pub use generate::{generate, Generator};
pub use io::{load_matrix, save_matrix, MatrixFormat};
pub use report::{emit_report, ExperimentReport, ReportFormat};
