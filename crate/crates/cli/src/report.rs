//! JSON summary reports. Every report round-trips through serde_json
//! losslessly: `parse(serialize(r)) == r`.

use serde::{Deserialize, Serialize};

use nashseek::analysis::{RunMetrics, StabilityReport};
use nashseek::controller::FrequencyReport;
use nashseek::sim::Termination;

/// Metrics of one run plus the reference they were scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsOut {
    pub u_star: Vec<f64>,
    pub j_star: Vec<f64>,
    pub epsilon: f64,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}

/// One simulated arm of a run or comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    /// Seeker scheme the arm ran under.
    pub mode: String,
    pub final_time: f64,
    pub final_estimates: Vec<f64>,
    pub final_actions: Vec<f64>,
    pub final_amplitudes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminated_early: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsOut>,
    /// Path of the trajectory CSV written for this arm, when any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
}

/// Top-level JSON document written next to the CSVs (or printed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub tool_version: String,
    /// Which subcommand produced the report.
    pub command: String,
    /// Canonical config text the run is reproducible from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_report: Option<FrequencyReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arms: Vec<ArmReport>,
    /// Per-player `residual_oscillation(classical) / residual_oscillation
    /// (wsso)`; `None` where the wsso arm's oscillation is exactly zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_ratio: Option<Vec<Option<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SummaryReport {
    pub fn new(command: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_echo: None,
            frequency_report: None,
            arms: Vec::new(),
            oscillation_ratio: None,
            stability: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
