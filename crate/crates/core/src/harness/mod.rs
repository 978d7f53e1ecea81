//! Seeded Monte-Carlo experiments over every receiver, parameter sweeps and
//! CSV output.

mod config;
mod output;
mod trials;

pub use config::{parse_key_values, EeAggregation, ExperimentConfig, Scheme, SweepSpec, SweepVar, GAMMA_GRID};
pub use output::{emit_csv, format_sig6, write_csv, CSV_HEADER};
pub use trials::{
    run_trial, run_trial_records, run_trials, summarize, sweep, trial_seed, Stat, SummaryRow, TrialOutcome, TrialRecord,
};
