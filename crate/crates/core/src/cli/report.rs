use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::RunConfig;
use crate::error::Result;
use crate::rng::GENERATOR;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngInfo {
    pub generator: String,
    pub seed: u64,
}

/// One command's JSON report. Everything except `wall_clock_seconds` is a
/// deterministic function of the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub artifact: Artifact,
    pub command: String,
    pub rng: RngInfo,
    pub config: RunConfig,
    pub results: BTreeMap<String, Value>,
    pub verdicts: BTreeMap<String, bool>,
    pub notes: Vec<String>,
    /// Side files written next to the report, relative to the output directory.
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let mut echo = config.clone();
        echo.threads = None;
        Report {
            schema_version: SCHEMA_VERSION,
            artifact: Artifact { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() },
            command: command.into(),
            rng: RngInfo { generator: GENERATOR.into(), seed: config.seed },
            config: echo,
            results: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            notes: Vec::new(),
            files: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn insert<T: Serialize>(&mut self, key: &str, value: &T) {
        self.results.insert(key.into(), serde_json::to_value(value).expect("result serialises"));
    }

    pub fn verdict(&mut self, key: &str, value: bool) {
        self.verdicts.insert(key.into(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
