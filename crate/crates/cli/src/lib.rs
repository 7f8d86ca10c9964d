//! Scenario files, batch execution and report output for the
//! `sybil-atsc-core` simulator.

pub mod error;
pub mod report;
pub mod scenario;
pub mod solve;
pub mod suite;

pub use error::CliError;
pub use scenario::{parse_scenario, parse_scenario_str, ScenarioConfig};
pub use suite::{load_suite, run_scenario, run_suite, SuiteOutput};
