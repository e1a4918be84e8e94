use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to re-run a command, written next to its outputs as
/// `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub argv: Vec<String>,
    /// The config after loading, lumping untouched; `null` for commands
    /// without one.
    pub config: Value,
    pub config_fingerprint: Option<String>,
    pub overrides: BTreeMap<String, Value>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub created_unix: u64,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            argv: argv.to_vec(),
            config: Value::Null,
            config_fingerprint: None,
            overrides: BTreeMap::new(),
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: created_unix(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn manifest_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Writes one manifest beside every output.
    pub fn write(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        for output in &self.outputs {
            let path = Self::manifest_path(output);
            std::fs::write(&path, &text)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

fn created_unix() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}
