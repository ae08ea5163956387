//! Seeded verification runs: sampling, suite dispatch and reports.

mod config;
mod report;
mod sampling;
mod suites;

pub use config::{OutputFormat, RunConfig, ALL_SUITES, SEED_ENV};
pub use report::{SuiteReport, SuiteResult, Timing};
pub use sampling::{sample_char, sample_point, sample_tau, sample_tau_box, stream};
pub use suites::{run_suite, STABILITY_TOLERANCE};
