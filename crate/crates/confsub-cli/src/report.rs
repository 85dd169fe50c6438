//! Report structure and writers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub values: BTreeMap<String, Value>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Check {
    /// Passes when `residual ≤ tolerance`; a NaN residual fails.
    pub fn bounded(name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
        Check { name: name.into(), values: BTreeMap::new(), residual: Some(residual), tolerance: Some(tolerance), pass: residual <= tolerance, message: None }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Check {
        Check { name: name.into(), values: BTreeMap::new(), residual: None, tolerance: None, pass, message: None }
    }

    /// A check that could not be carried out.
    pub fn failed(name: impl Into<String>, err: &confsub::Error) -> Check {
        let mut c = Check::flag(name, false);
        if let confsub::Error::Precondition { residual, .. } = err {
            c.residual = Some(*residual);
        }
        c.message = Some(err.to_string());
        c
    }

    pub fn value(mut self, key: &str, v: impl Into<Value>) -> Check {
        self.values.insert(key.to_string(), v.into());
        self
    }

    pub fn note(mut self, message: impl Into<String>) -> Check {
        self.message = Some(message.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Library {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub checks_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub library: Library,
    pub task: String,
    pub config: ScenarioConfig,
    pub subject: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    pub passed: bool,
    pub timings: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// `(ε, value)` rows with a header.
pub fn write_samples_csv(path: &Path, eps: &[f64], values: &[f64]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["eps", "value"])?;
    for (e, v) in eps.iter().zip(values) {
        w.write_record([format!("{e:e}"), format!("{v:e}")])?;
    }
    w.flush()
}

/// Finite floats as numbers, others as strings, so reports stay valid JSON.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(x.to_string())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}
