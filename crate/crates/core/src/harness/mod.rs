//! Experiment configuration, the Monte Carlo engine and result persistence.
//! This is the only module that spawns threads.

pub mod config;
pub mod engine;
pub mod output;

pub use config::{preset, ExperimentConfig, Scenario};
pub use engine::{run, run_bias_sweep, run_scenario, ScenarioOutput, TrialRecord};
pub use output::{emit_csv, read_csv, write_metadata};
