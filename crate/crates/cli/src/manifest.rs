//! Run manifests: seed, resolved config, content hash, and metrics.
//!
//! Metrics are rejected if non-finite (the JSON contract has no NaN).
//! Wall times live under their own key so determinism checks can compare
//! manifests with that single key dropped.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::CliError;

#[derive(Debug, Default)]
pub struct Metrics {
    values: BTreeMap<String, f64>,
}

impl Metrics {
    pub fn put(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        if !value.is_finite() {
            return Err(CliError::Internal(format!("metric '{name}' is non-finite ({value})")));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.values {
            map.insert(k.clone(), json!(v));
        }
        Value::Object(map)
    }
}

pub struct RunManifest<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a Config,
    pub metrics: Metrics,
    pub wall_time_s: BTreeMap<String, f64>,
    /// Mixture-component modes, when the run produced a learned path.
    pub kmm_modes: Option<Vec<Option<f64>>>,
}

impl<'a> RunManifest<'a> {
    pub fn new(command: &'a str, seed: u64, config: &'a Config) -> Self {
        RunManifest {
            command,
            seed,
            config,
            metrics: Metrics::default(),
            wall_time_s: BTreeMap::new(),
            kmm_modes: None,
        }
    }

    pub fn phase(&mut self, name: &str, seconds: f64) {
        self.wall_time_s.insert(name.to_string(), seconds);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut config = Map::new();
        for (k, v) in self.config.entries() {
            config.insert(k.clone(), json!(v));
        }
        let mut root = Map::new();
        root.insert("command".into(), json!(self.command));
        root.insert("seed".into(), json!(self.seed));
        root.insert("config".into(), Value::Object(config));
        root.insert("config_hash".into(), json!(self.config.content_hash()));
        root.insert("metrics".into(), self.metrics.to_json());
        if let Some(modes) = &self.kmm_modes {
            root.insert(
                "kmm_modes".into(),
                Value::Array(
                    modes
                        .iter()
                        .map(|m| match m {
                            Some(v) if v.is_finite() => json!(v),
                            _ => Value::Null,
                        })
                        .collect(),
                ),
            );
        }
        let mut wall = Map::new();
        for (k, v) in &self.wall_time_s {
            wall.insert(k.clone(), json!(v));
        }
        root.insert("wall_time_s".into(), Value::Object(wall));
        let text = serde_json::to_string_pretty(&Value::Object(root))
            .map_err(|e| CliError::Internal(format!("manifest serialization: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Internal(format!("writing manifest: {e}")))?;
        Ok(())
    }
}
