//! Experiment harness around `regmatch`: configuration, parallel trials,
//! aggregation and report files.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Kind};
pub use report::ExperimentReport;
pub use run::run_experiment;
