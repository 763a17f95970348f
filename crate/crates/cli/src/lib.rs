//! Scenario files, diagnostics and run orchestration behind the `tripod`
//! command.
//!
//! - [`scenario`]: TOML scenario documents with strict key checking
//! - [`diagnostics`]: CFL, adiabaticity and resolution checks
//! - [`runner`]: storage/release runs, dip sweeps, beam-splitter reports
//! - [`output`]: CSV and JSON result files

pub mod diagnostics;
pub mod output;
pub mod runner;
pub mod scenario;

pub use diagnostics::{validate, Diagnostics};
pub use output::Format;
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};
