//! Scenario runner for the `sgcalc` command.

pub mod corpus;
pub mod explain;
pub mod run;
pub mod scenario;

pub use run::{run, RunConfig, RunReport};
pub use scenario::{Scenario, ScenarioError};

/// JSON schema of `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
