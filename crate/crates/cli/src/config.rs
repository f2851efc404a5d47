//! Flat key=value experiment configs.
//!
//! One config file can drive the whole pipeline: each command reads the keys
//! it needs and ignores the rest. Lines are `key=value`; blank lines and
//! `#` comments are skipped; keys may not repeat.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

/// Parse config-style text into a key/value map.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut values = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{origin} line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(CliError::Config(format!(
                "{origin} line {}: bad key {key:?}",
                lineno + 1
            )));
        }
        if values.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "{origin} line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }
    Ok(values)
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Config {
            values: parse_kv(&text, &path.display().to_string())?,
        })
    }

    pub fn from_text(text: &str) -> Result<Config> {
        Ok(Config {
            values: parse_kv(text, "config")?,
        })
    }

    pub fn from_map(values: BTreeMap<String, String>) -> Config {
        Config { values }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require(key)?))
    }

    pub fn path_opt(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    fn parse_with<T>(&self, key: &str, what: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("key {key:?}: expected {what}, got {raw:?}"))
            }),
        }
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, "an unsigned integer")
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.usize_opt(key)?.unwrap_or(default))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.require(key)?;
        Ok(self.usize_opt(key)?.expect("key checked above"))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parse_with(key, "an unsigned integer")?.unwrap_or(default))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, "a number")
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(raw) => Err(CliError::Config(format!(
                "key {key:?}: expected true or false, got {raw:?}"
            ))),
        }
    }

    fn list_with<T>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>>
    where
        T: std::str::FromStr,
    {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            out.push(part.parse::<T>().map_err(|_| {
                CliError::Config(format!("key {key:?}: expected {what}, got {part:?}"))
            })?);
        }
        Ok(Some(out))
    }

    pub fn usize_list_opt(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.list_with(key, "a list of unsigned integers")
    }

    pub fn require_usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.usize_list_opt(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn u64_list_opt(&self, key: &str) -> Result<Option<Vec<u64>>> {
        self.list_with(key, "a list of unsigned integers")
    }

    pub fn require_u64_list(&self, key: &str) -> Result<Vec<u64>> {
        self.u64_list_opt(key)?
            .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .list_with(key, "a list of numbers")?
            .unwrap_or_else(|| default.to_vec()))
    }

    /// Station list for fixed-subset placement: `row:col` pairs, comma
    /// separated, e.g. `stations=3:4,7:9`.
    pub fn stations_opt(&self, key: &str) -> Result<Option<Vec<(usize, usize)>>> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            let bad = || CliError::Config(format!("key {key:?}: expected row:col, got {part:?}"));
            let (r, c) = part.split_once(':').ok_or_else(bad)?;
            out.push((
                r.trim().parse::<usize>().map_err(|_| bad())?,
                c.trim().parse::<usize>().map_err(|_| bad())?,
            ));
        }
        Ok(Some(out))
    }
}
