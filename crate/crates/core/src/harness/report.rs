use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::AuditReport;

/// Summary of one run. Everything except `wall_clock_s` is a deterministic function of the
/// config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub bin_width: f64,
    pub sites: usize,
    pub records: usize,
    pub total_captured: f64,
    pub unassigned: f64,
    /// Captured probability in keys at or below the record floor.
    pub unresolved: f64,
    pub free_norm: f64,
    /// Largest |free norm + captured - initial norm| over the run.
    pub max_norm_identity: f64,
    pub max_step_residual: f64,
    pub max_interior_leak: f64,
    /// Sum of the negative per-step capture increments.
    pub negative_capture: f64,
    pub overlap_metric: f64,
    pub overlap_flag: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub born_l1: Option<f64>,
    pub wall_clock_s: f64,
    pub audit: AuditReport,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl ScenarioReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Copy with the wall clock zeroed, for determinism comparisons.
    pub fn without_clock(&self) -> Self {
        ScenarioReport { wall_clock_s: 0.0, ..self.clone() }
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}
