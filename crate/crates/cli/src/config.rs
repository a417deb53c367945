//! Flat key-value run configuration with dotted section keys.
//!
//! Every key has a default; resolution materializes all of them, so the
//! manifest always records the complete effective configuration and two
//! runs with equal manifests are byte-reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

/// (key, default, help) table; the single source of truth for known keys.
const KEYS: &[(&str, &str)] = &[
    ("seed", "42"),
    ("task.dim", "2"),
    ("task.rho", "0.5"),
    ("task.eps", "0.25"),
    ("task.sigma1_sq", "4.0"),
    ("task.path", ""),
    ("task.standardize", "true"),
    ("interpolant", "auto"),
    ("constraint", "affine"),
    ("ddbi.gamma", "1.0"),
    ("ddbi.epsilon", "0.001"),
    ("path.k", "5"),
    ("path.lr", "0.05"),
    ("path.opt_steps", "200"),
    ("variance.grid_points", "1000"),
    ("variance.t_clamp", "1e-5"),
    ("sampler.eps_w", "0.01"),
    ("train.batch_size", "512"),
    ("train.steps", "5000"),
    ("train.lr", "0.001"),
    ("train.path_update_every", "50"),
    ("train.hidden", "128,128"),
    ("train.uwso_temperature", "2.0"),
    ("train.uwso_eps", "1e-8"),
    ("train.moment_samples", "32768"),
    ("infer.steps", "1000"),
    ("infer.rule", "trapezoid"),
    ("infer.eval_samples", "4096"),
    ("infer.analytic_schedule", "trig"),
];

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn defaults() -> Self {
        Config {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Parse `key=value` lines; `#` starts a comment, blank lines ignored.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Config::defaults();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !self.values.contains_key(key) {
            return Err(CliError::Usage(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("config key '{key}' missing from defaults table"))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Usage(format!("config {key}: expected integer, got '{}'", self.raw(key))))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Usage(format!("config {key}: expected integer, got '{}'", self.raw(key))))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key)
            .parse()
            .map_err(|_| CliError::Usage(format!("config {key}: expected number, got '{}'", self.raw(key))))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(CliError::Usage(format!("config {key}: expected bool, got '{other}'"))),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.raw(key)
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| {
                    CliError::Usage(format!("config {key}: expected comma-separated integers"))
                })
            })
            .collect()
    }

    /// `usize::MAX` encodes "never" (accepts `inf`).
    pub fn usize_or_inf(&self, key: &str) -> Result<usize, CliError> {
        match self.raw(key) {
            "inf" | "never" => Ok(usize::MAX),
            _ => self.usize(key),
        }
    }

    /// All resolved values, for the manifest.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Content hash of the canonical `key=value` listing.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.values {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        format!("sha256:{:x}", hasher.finalize())
    }
}
