//! Experiment harness, configuration files, and result emission around
//! `isac-core`: seeded Monte-Carlo campaigns for the standard figure sweeps,
//! paired comparisons with common random numbers, and CSV/JSON tables.

pub mod config;
pub mod harness;
pub mod report;

pub use config::{load_config, ConfigFile};
pub use harness::{
    emit_results, paired_compare, run_monte_carlo, ExperimentSpec, FigureId, OutputFormat,
    Pipeline, SummaryRow, TrialDelta,
};
