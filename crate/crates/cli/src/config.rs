//! Experiment configuration and report types.

use crate::family::FamilySpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    /// Check names executed in declared order.
    pub suite: Vec<String>,
    /// Per-check parameter grids (rows of parameter tuples).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, Vec<Vec<f64>>>,
    /// Per-check tolerance overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// One measurement row: pass iff value <= tolerance-or-bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub parameters: Vec<f64>,
    /// Measured residual or norm.
    pub value: f64,
    /// The quantity `value` is compared against.
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Wall time of the owning check, milliseconds. Excluded from the
    /// determinism contract.
    pub wall_ms: f64,
}

impl CheckRecord {
    pub fn measurement(name: &str, parameters: Vec<f64>, value: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            parameters,
            value,
            bound: tolerance,
            tolerance,
            pass: value <= tolerance,
            error: None,
            wall_ms: 0.0,
        }
    }

    pub fn comparison(
        name: &str,
        parameters: Vec<f64>,
        value: f64,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        CheckRecord {
            name: name.into(),
            parameters,
            value,
            bound,
            tolerance,
            pass: value <= bound + tolerance,
            error: None,
            wall_ms: 0.0,
        }
    }

    pub fn failure(name: &str, message: String) -> Self {
        CheckRecord {
            name: name.into(),
            parameters: Vec::new(),
            value: f64::NAN,
            bound: 0.0,
            tolerance: 0.0,
            pass: false,
            error: Some(message),
            wall_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<CheckRecord>,
    pub versions: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// CSV view: check, param_1..param_k, value, bound, tolerance, pass.
    pub fn to_csv(&self) -> String {
        let k = self
            .records
            .iter()
            .map(|r| r.parameters.len())
            .max()
            .unwrap_or(0);
        let mut out = String::from("check");
        for i in 1..=k {
            out.push_str(&format!(",param_{i}"));
        }
        out.push_str(",value,bound,tolerance,pass\n");
        for r in &self.records {
            out.push_str(&r.name);
            for i in 0..k {
                match r.parameters.get(i) {
                    Some(p) => out.push_str(&format!(",{p}")),
                    None => out.push(','),
                }
            }
            out.push_str(&format!(
                ",{},{},{},{}\n",
                r.value, r.bound, r.tolerance, r.pass
            ));
        }
        out
    }
}

/// Write atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &std::path::Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
