//! Line-oriented `key = value` configuration.
//!
//! Keys are dotted (`model.alpha = 0.5`); a `[model]` line prefixes the
//! keys that follow it. `#` starts a comment. Every file carries
//! `schema_version = 1`. Unknown keys are rejected so that typos do not
//! silently fall back to defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem, located by key (or line) in the file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Parsed key/value pairs with use tracking.
#[derive(Debug)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(format!("line {lineno}"), "unterminated section header"))?
                    .trim();
                if !valid_key(name) {
                    return Err(ConfigError::new(
                        format!("line {lineno}"),
                        format!("bad section name `{name}`"),
                    ));
                }
                section = format!("{name}.");
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {lineno}"), "expected `key = value`"))?;
            let key = format!("{section}{}", key.trim());
            if !valid_key(&key) {
                return Err(ConfigError::new(format!("line {lineno}"), format!("bad key `{key}`")));
            }
            let value = value.trim().trim_matches('"').to_string();
            if let Some((_, first)) = entries.insert(key.clone(), (value, lineno)) {
                return Err(ConfigError::new(key, format!("set twice (lines {first} and {lineno})")));
            }
        }
        let cfg = Self {
            entries,
            used: RefCell::new(BTreeSet::new()),
        };
        match cfg.get::<u32>("schema_version")? {
            Some(SCHEMA_VERSION) => Ok(cfg),
            Some(v) => Err(ConfigError::new("schema_version", format!("unsupported version {v}"))),
            None => Err(ConfigError::new("schema_version", "missing")),
        }
    }

    /// Supplies `value` for `key` unless the file sets it.
    pub fn set_default(&mut self, key: &str, value: String) {
        self.entries.entry(key.to_string()).or_insert((value, 0));
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::new(key, "missing"))
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    /// Comma-separated numbers.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) if v.trim().is_empty() => Ok(Some(Vec::new())),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError::new(key, format!("cannot parse `{}`", s.trim())))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    /// Fails on the first key nobody asked for.
    pub fn reject_unused(&self) -> Result<(), ConfigError> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(ConfigError::new(k.clone(), "unknown key")),
            None => Ok(()),
        }
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && !k.starts_with('.')
        && !k.ends_with('.')
        && k.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
}
