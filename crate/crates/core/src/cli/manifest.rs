use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::io::{sha256_file, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Record of one invocation, written as `manifest.json` next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command line; replaying it reproduces the run.
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    /// `"ok"` or `"not_converged"`.
    pub status: String,
    pub results: BTreeMap<String, Value>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: &[String],
        parameters: BTreeMap<String, Value>,
        inputs: Vec<InputDigest>,
        outputs: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            parameters,
            inputs,
            outputs,
            status: "ok".into(),
            results: BTreeMap::new(),
            tool_version: format!("gglopt {}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn with_result(mut self, key: &str, value: Value) -> Self {
        self.results.insert(key.to_string(), value);
        self
    }

    pub fn with_status(mut self, converged: bool) -> Self {
        self.status = if converged { "ok" } else { "not_converged" }.into();
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}
