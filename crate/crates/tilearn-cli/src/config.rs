//! A flat key=value configuration format with `[section]` headers.
//!
//! Keys are addressed as `section.key`. Lines starting with `#` and blank
//! lines are ignored. The raw file bytes feed the config digest embedded
//! in every output file, so identical configs yield identical headers.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    digest: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key = value, got {line:?}",
                    lineno + 1
                )));
            };
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            values.insert(full, value.trim().to_string());
        }
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hex_prefix(&hasher.finalize(), 16);
        Ok(Config { values, digest })
    }

    pub fn read_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Short hex digest of the raw config text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing config key '{key}'")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("config key '{key}' has invalid value {v:?}"))
            }),
        }
    }

    pub fn require_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get_parsed(key)?
            .ok_or_else(|| CliError::Config(format!("missing config key '{key}'")))
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::Config(format!(
                "config key '{key}' must be a boolean, got {v:?}"
            ))),
        }
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        CliError::Config(format!("config key '{key}' has invalid entry {t:?}"))
                    })
                })
                .collect::<Result<Vec<f64>, CliError>>()
                .map(Some),
        }
    }

    pub fn get_u64_list(&self, key: &str) -> Result<Option<Vec<u64>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim().parse::<u64>().map_err(|_| {
                        CliError::Config(format!("config key '{key}' has invalid entry {t:?}"))
                    })
                })
                .collect::<Result<Vec<u64>, CliError>>()
                .map(Some),
        }
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut out = String::with_capacity(chars);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
        if out.len() >= chars {
            break;
        }
    }
    out.truncate(chars);
    out
}
