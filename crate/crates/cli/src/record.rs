use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One line of JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub inputs: Value,
    pub value: [f64; 2],
    pub err_estimate: f64,
    pub representation: String,
    pub wall_time_ms: f64,
    pub library_version: String,
}

impl ResultRecord {
    pub fn new(command: &str, inputs: Value, value: [f64; 2], err_estimate: f64, representation: &str) -> ResultRecord {
        ResultRecord {
            command: command.to_string(),
            inputs,
            value,
            err_estimate,
            representation: representation.to_string(),
            wall_time_ms: 0.0,
            library_version: LIBRARY_VERSION.to_string(),
        }
    }

    /// Names the first non-finite number, if any. JSON cannot carry NaN, so
    /// such a record must never be written.
    pub fn non_finite(&self) -> Option<String> {
        let mut bad = Vec::new();
        if !self.value.iter().all(|v| v.is_finite()) {
            bad.push("value");
        }
        if !self.err_estimate.is_finite() {
            bad.push("err_estimate");
        }
        if bad.is_empty() {
            None
        } else {
            Some(format!("{} produced a non-finite {} for inputs {}", self.command, bad.join(" and "), self.inputs))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records hold only finite numbers and strings")
    }
}
