//! Artifact writing with provenance: a `#` header line on text and CSV
//! files, a `provenance` key on JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

/// Where a run writes, and what it echoes into every file.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
    subcommand: &'static str,
    seed: u64,
    config_echo: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, subcommand: &'static str, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand,
            seed: cfg.seed,
            config_echo: cfg.echo(),
            written: Vec::new(),
        })
    }

    pub fn header(&self) -> String {
        format!(
            "# manifold-sde {} seed={} config={}\n",
            self.subcommand, self.seed, self.config_echo
        )
    }

    /// Files written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `body` (CSV or plain text) after the header line.
    pub fn text(&mut self, name: &str, body: &[u8]) -> Result<PathBuf> {
        let mut bytes = self.header().into_bytes();
        bytes.extend_from_slice(body);
        self.write(name, &bytes)
    }

    /// Writes `report` as a pretty JSON object with a `provenance` key.
    pub fn json<S: Serialize>(&mut self, name: &str, report: &S) -> Result<PathBuf> {
        let mut obj = match serde_json::to_value(report)? {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        let config: Value = serde_json::from_str(&self.config_echo)?;
        obj.insert(
            "provenance".into(),
            json!({
                "tool": "manifold-sde",
                "version": env!("CARGO_PKG_VERSION"),
                "subcommand": self.subcommand,
                "seed": self.seed,
                "config": config,
            }),
        );
        let mut text = serde_json::to_string_pretty(&Value::Object(obj))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}
