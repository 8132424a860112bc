//! Config-driven scenario runs: loading, stepping, reference comparisons and reports.

mod analysis;
mod config;
mod report;
mod run;
mod scenarios;
mod separable;

pub use analysis::{evaluate, fringe_metrics, TIMING_FLOOR};
pub use config::*;
pub use report::ScenarioReport;
pub use run::{ledger_summary, run, run_to_dir, RunOutput};
pub use scenarios::*;
pub use separable::{Panels, Transverse};
