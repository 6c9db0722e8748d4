//! Monte Carlo experiment harness: signal generation, metrics, grid runs and
//! statistical verifiers.

pub mod experiment;
pub mod metrics;
pub mod signal;
pub mod verify;

pub use experiment::{
    run_grid, run_trial, AggregateResult, ExperimentKind, ExperimentSpec, GridReport, RadiusMode, Summary,
    TrialResult,
};
pub use metrics::{metrics, MetricTarget, Metrics};
pub use signal::{generate_signal, generate_signal_with, SignalClass};
pub use verify::{
    calibrate_c_emp, ks_distance, percentile, verify_concentration, verify_mean_identity, verify_oracle,
    ConcentrationConfig, ConcentrationReport, MeanIdentityReport, OracleCheck, OracleFamily, OracleReport,
};
