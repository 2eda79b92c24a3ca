//! Experiment configuration, Monte-Carlo orchestration and record output
//! for the `simulate` binary.

mod config;
mod crossover;
mod experiments;
pub mod properties;
mod record;

pub use config::{parse_filters, Experiment, ExperimentConfig, OrderingMode, OutputFormat};
pub use crossover::{crossover_gap, solve_alpha_crossover, solve_alpha_crossover_joint};
pub use experiments::{
    allocate, draw_trial, realized_sinr, realized_utility, run_experiment, theory_point, trial_order, TrialDraw,
};
pub use record::{emit_records, write_records, ExperimentRecord, HEADER};
