//! Experiment runner for `bflab-core`: key generation, simulation campaigns,
//! attack runs and model tables, all written as CSV with a `# key=value`
//! header.

pub mod config;
pub mod error;
pub mod experiment;
pub mod preset;
pub mod report;
pub mod select;

pub use config::{CodeSource, ExperimentConfig, ExperimentKind, PairPolicy};
pub use error::{LabError, Result};
pub use experiment::{output_path, run_experiment, Outcome, OutputFile};
pub use preset::{preset, PRESETS};
pub use report::{AttackReport, BlockDiff, ClassMean};
