//! JSON run report.

use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::criteria::CheckRow;

/// A parameter point whose integration failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub point: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub wall_ms: f64,
    pub workers: usize,
    pub seed: Option<u64>,
    /// Per-run timings, keyed by run label.
    pub runs: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub inputs: ExperimentConfig,
    pub runs: Vec<Value>,
    pub failures: Vec<PointFailure>,
    pub criteria: Vec<CheckRow>,
    pub passed: bool,
    pub runtime: Runtime,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
