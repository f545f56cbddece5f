//! Goodness-of-fit tests, the three-sampler conditional check, Birkhoff averaging and
//! the experiment runner that assembles them into reports.

mod birkhoff;
mod conditional;
mod experiments;
mod gof;
mod report;
pub mod special;

pub use birkhoff::{birkhoff_average, BirkhoffTrace};
pub use conditional::{verify_conditional_identity, ConditionalIdentity, Construction};
pub use experiments::{
    default_replicas, describe, run_experiment, ExperimentError, ExperimentSpec, BIRKHOFF_HIT_RATE,
    BIRKHOFF_TOLERANCE, EXPERIMENTS, INVARIANCE_BREAKPOINTS, INVARIANCE_MAX_TOTAL,
};
pub use gof::{
    chi_square_counts, chi_square_two_sample, fold_tail, histogram, ks_statistic, ks_test, merge_cells,
    poisson_cells, StatsError, TestResult, Verdict, ALPHA, MIN_EXPECTED,
};
pub use report::{Check, ExperimentReport, NamedTest, Outcome, MAX_CENSORED_FRACTION, REPORT_SCHEMA};
