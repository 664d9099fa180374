//! Experiment orchestration: configuration, the `h` sweep towards the limit
//! energy, the sandwich and convergence verdicts, and output files.

mod config;
mod experiment;
mod records;

pub use config::{
    parse_config, read_config, AdmissibilityMode, Continuation, DomainSpec, ExperimentConfig, RecoveryConfig,
};
pub use experiment::{
    check_load, make_record, prepare, render_limits, render_recovery, render_setup, run_experiment, run_limit,
    run_recover, run_recovery, run_sweep, sandwich_check, solve_limits, solved_records, ExperimentReport, LimitSummary,
    RecoveryOutcome, SandwichReport, Setup, SweepEntry, LIMIT_AGREEMENT,
};
pub use records::{
    convergence_verdict, default_tolerance, emit_outputs, fit_slack, format_csv, ConvergenceRecord, ConvergenceVerdict,
    SlackFit, CSV_HEADER,
};
