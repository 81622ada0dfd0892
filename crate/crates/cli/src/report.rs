//! Run manifests and JSON report envelopes.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: u32 = 1;

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Everything needed to rerun a command and reproduce its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub seed: u64,
    pub version: String,
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, argv: Vec<String>, seed: u64) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            argv,
            parameters: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: now(),
            finished: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn finish(&mut self) {
        self.finished = now();
    }
}

/// JSON output of one command.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport<'a, T: Serialize> {
    pub schema: u32,
    pub manifest: &'a RunManifest,
    pub data: T,
}
