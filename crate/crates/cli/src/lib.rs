//! Command-line front end: model classification, verification suites,
//! kernel evaluation and `c(lambda)` quadrature, with text, JSON and CSV
//! reports.

pub mod commands;
pub mod report;
pub mod suites;
pub mod vectors;

pub use commands::{run, Cli, Command};
pub use report::{Quantity, Record, Report};
pub use suites::{run_suite, Suite, SuiteOptions};
