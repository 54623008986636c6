//! Batch front-end: run configurations, verification suites and reports.
pub mod app;
pub mod config;
pub mod report;
pub mod suites;

pub use app::main_with_args;
pub use config::RunConfig;
pub use suites::{run_suite, SuiteRecord, SUITES};
