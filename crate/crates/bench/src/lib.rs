//! Experiment harness for the subspace recovery and clustering algorithms:
//! configuration, Monte-Carlo runners, CSV records and scene files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod records;
pub mod scene_io;

pub use config::{Algorithm, ExperimentConfig, ExperimentKind, ParamRow};
pub use error::{BenchError, Result};
pub use experiments::{run, run_clustering_experiment, run_complexity_sweep, run_recovery_experiment, run_theory};
