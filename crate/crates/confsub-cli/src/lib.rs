//! Scenario runner for `confsub`: TOML scenarios in, JSON reports out.

pub mod cli;
pub mod config;
pub mod report;
pub mod scene;
pub mod tasks;

pub use config::{ConfigError, ScenarioConfig, Task};
pub use report::{Check, Report};
pub use tasks::run;
