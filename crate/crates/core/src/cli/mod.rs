//! Experiment configs, mode dispatch, run summaries and the speedup harness
//! behind the `elastic-opt` binary.

mod config;
mod run;
mod speedup;
mod summarize;

pub use config::{ExperimentConfig, Mode, KEYS};
pub use run::{
    averaged_iterate, exit_code, run, worker_dir, write_resolved, EXIT_DIVERGED, EXIT_OK, EXIT_OTHER, EXIT_TIMEOUT,
    EXIT_VALIDATION,
};
pub use speedup::{pilot_threshold, speedup_run, speedup_run_with, speedup_table, speedup_to_csv, SpeedupRow};
pub use summarize::{summarize, summarize_glob, summary_to_csv, SummaryRow, SUMMARY_HEADER};
