//! Scenario runner for the semi-discrete wave laboratory: loads TOML
//! scenarios, runs the simulate, certify and Gevrey pipelines and writes
//! reproducible CSV tables.

pub mod config;
pub mod error;
pub mod output;
pub mod registry;
pub mod run;

pub use config::{Scenario, Task};
pub use error::{LabError, LabResult};
pub use run::{run, verify, RunReport};
