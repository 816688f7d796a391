//! Config-driven runs, refinement studies and the benchmark catalog.

mod catalog;
mod config;
pub(crate) mod decimal;
mod run;
mod study;

pub use catalog::{benchmark, list_benchmarks, BenchmarkEntry};
pub use config::{
    EnsembleConfig, ExperimentConfig, FlowSpec, GeneratorSpec, GridSpec, ManifoldSpec, OutputSpec, Reference, Resolved,
    ScanSpec, StepSize, TimeSpec,
};
pub use run::{
    default_output_dir, is_validation_error, run_experiment, write_atomic, CriterionResult, EnsembleSummary, FileEntry,
    FlowSummary, RunReport, ScanSummary,
};
pub use study::{convergence_study, fit_order, max_space_time_dist, stationary_deviation, StudyAxis, StudyTable};
