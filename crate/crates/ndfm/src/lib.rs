//! File formats, scenario files, reference oracles, convergence and
//! consistency studies, and parallel assembly for `ndfm-core`.

pub mod io;
pub mod meshgen;
pub mod oracle;
pub mod par;
pub mod scenario;
pub mod study;

pub use ndfm_core as core;
pub use scenario::{run_scenario, ScenarioConfig, ScenarioRun};
