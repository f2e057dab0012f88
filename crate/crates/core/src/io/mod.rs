//! Configuration documents, run orchestration, and CSV output.

pub mod config;
pub mod convergence;
pub mod driver;
pub mod output;

pub use config::{
    ConvergenceSettings, DistributionRequest, ManifestInfo, PresetRef, Quantity, RunConfig, RunMode, RunSection,
    ScenarioSource, SCHEMA_VERSION,
};
pub use convergence::{convergence_study, l1_time_error, ConvergenceStudy};
pub use driver::{deterministic, execute, load_manifest, snapshot_distribution, DistributionSummary, RunReport, MANIFEST_FILE};
pub use output::{
    distribution_file_name, distribution_rows, timeseries_file_name, write_convergence, write_distribution,
    write_timeseries, ConvergenceRow, CONVERGENCE_HEADER, DISTRIBUTION_HEADER, TIMESERIES_HEADER,
};
