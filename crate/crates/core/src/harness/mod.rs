//! Configuration, trial orchestration and output.

mod config;
mod csv;
mod experiment;
mod selftest;

pub use config::{
    load_config, AlgorithmSection, ChannelSection, ExperimentConfig, RawConfig, RunSection, TaskSection, Variant,
    SEED_ENV,
};
pub use csv::{emit_csv, format_csv, CSV_HEADER};
pub use experiment::{
    analyze_task, build_task, run_experiment, run_experiment_on, wall_units, RunSummary, TrialFinal, TrialOutcome,
};
pub use selftest::{run_selftest, Check, SelftestReport};
