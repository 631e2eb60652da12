//! Report types serialized to `report.json`.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// A residual and the tolerance it was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Residual {
    pub fn new(value: f64, tolerance: f64) -> Self {
        Self {
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub residuals: BTreeMap<String, Residual>,
    pub dims: BTreeMap<String, Value>,
    pub verdicts: BTreeMap<String, bool>,
    pub data: BTreeMap<String, Value>,
    /// Overall verdict at this level, for commands that produce one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
}

impl LevelResult {
    pub fn new(level: usize) -> Self {
        Self {
            level,
            ..Self::default()
        }
    }

    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals.insert(name.to_string(), Residual::new(value, tolerance));
    }

    pub fn dim(&mut self, name: &str, value: impl Serialize) {
        self.dims.insert(name.to_string(), to_value(value));
    }

    pub fn datum(&mut self, name: &str, value: impl Serialize) {
        self.data.insert(name.to_string(), to_value(value));
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub library: &'static str,
    pub version: &'static str,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub levels: Vec<LevelResult>,
    /// Conjunction of the level verdicts; absent for commands without one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

/// One row of `moments.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub level: usize,
    pub k: i64,
    pub m: [f64; 2],
    pub w: [f64; 2],
    pub deviation: f64,
}

/// Report plus the tabular data behind the CSV files.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// `(level, leading singular values of P_∞ S2 (I − P_∞))`.
    pub decay: Vec<(usize, Vec<f64>)>,
    pub moments: Vec<MomentRow>,
    /// `(θ, |φ(e^{iθ})|²)`.
    pub boundary: Vec<(f64, f64)>,
}

impl RunOutput {
    /// 0 on success, 2 when the run's verdict is false.
    pub fn exit_code(&self) -> u8 {
        match self.report.verdict {
            Some(false) => 2,
            _ => 0,
        }
    }
}
