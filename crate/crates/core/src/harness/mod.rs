//! Experiment descriptions, batch runs, result tables and the command line.

mod cli;
pub mod invariants;
mod run;
mod spec;
mod table;

pub use cli::{cli_main, default_scenarios, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
pub use run::{replica_seed, run_experiment, RunOptions, WORKERS_ENV};
pub use spec::{
    format_intervals, parse_intervals, parse_spec, parse_sweep, ExperimentKind, ExperimentSpec,
    RawSpec, DEFAULT_REPLICAS, DEFAULT_SEED,
};
pub use table::{check_predictions, emit_csv, read_csv, ResultRow, ResultTable, COLUMNS};
