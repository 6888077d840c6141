//! Experiment layer: trial fan-out, statistics, closed-form targets, and the
//! report-producing commands behind the CLI.

mod commands;
pub mod theory;
mod trials;

pub use commands::{
    attack_theory, cmd_attack, cmd_completeness, cmd_nonlocal, cmd_poq, cmd_trace, run_experiment, Experiment,
    ExperimentConfig, ExperimentError, Format, Report, ResultRow, CONFIG_KEYS, CSV_HEADER, SWEEP_POSITIONS,
};
pub use trials::{
    map_trials, run_trials, run_trials_sequential, wilson_interval, Estimate, InvalidTrials, Z95,
};

#[cfg(feature = "parallel")]
pub use trials::run_trials_parallel;
