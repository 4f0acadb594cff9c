use serde::Serialize;

use super::config::ExperimentConfig;
use crate::kernel::advantage::AdvantageReport;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The property this verdict asserts.
    pub invariant: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, invariant: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), invariant: invariant.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub trials: u64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advantage: Option<AdvantageReport>,
    /// min(2q + r, q + 2r) for UE chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_coefficient: Option<u64>,
    /// Kind-specific measurements.
    pub data: serde_json::Value,
    pub runtime_ms: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
