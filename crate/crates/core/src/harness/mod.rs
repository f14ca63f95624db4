//! Experiment configuration, orchestration, the table registry and
//! report output.

pub mod config;
pub mod registry;
pub mod report;
pub mod run;
pub mod selftest;

pub use crate::problem::{build_manufactured, true_qoi, ProblemBundle, QoiWeight};
pub use config::{ExperimentConfig, Integrator, OutputFormat};
pub use registry::{lookup, registry, TableSpec};
pub use report::{emit_report, render};
pub use run::{run_detailed, run_experiment, run_sweep, Discretization, ExperimentRun, RunRecord};
