//! Machine-readable summary written alongside every command's data.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub summary: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config_bytes: &[u8]) -> Self {
        let digest = Sha256::digest(config_bytes);
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Non-finite numbers have no JSON form; they are stored as strings.
    pub fn set_num(&mut self, key: &str, v: f64) {
        self.set(key, number(v));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

pub fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(crate::csv::format_number(v)), Value::Number)
}
