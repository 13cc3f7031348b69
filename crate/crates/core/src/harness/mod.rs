//! Experiment driver: configuration, step-size grid search, CSV output and
//! the rate tables.

mod comparison;
mod config;
mod output;
mod rates;
mod runner;

pub use comparison::{time_to_target_cell, CellOutcome, CellSpec, SideOutcome};
pub use config::{EtaSpec, ExperimentConfig, ETA_GRID};
pub use output::{write_summary, write_trace, SummaryRow, SUMMARY_HEADER, TRACE_HEADER};
pub use rates::{rate_table, write_rates, RateRow};
pub use runner::{
    grid_search_eta, grid_search_eta_pruned, rank_runs, run_algorithm, run_experiment, EtaRun,
    ExperimentReport, GridOutcome,
};
