//! Flat INI-style configuration file: `key = value` lines, `#`/`;` comments,
//! no sections. Command-line flags override file values. Unknown keys are
//! rejected with a line diagnostic so typos cannot silently change a run.

use std::collections::BTreeMap;
use std::path::Path;

use robust_pricing::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "payoff",
    "k",
    "c0",
    "payoff-csv",
    "c",
    "n",
    "n-list",
    "zeta",
    "delta",
    "grid-size",
    "moment-grid",
    "tail-sigmas",
    "samples",
    "paths",
    "seed",
    "strategy",
    "policy",
    "objective",
    "v",
    "m-list",
    "out",
    "out-policy",
    "out-values",
    "store-values",
    "format",
    "workers",
    "mc",
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!(
                    "config line {}: expected 'key = value', got '{raw}'",
                    i + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Parse(format!(
                    "config line {}: unknown key '{key}'",
                    i + 1
                )));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered config key {key}");
        self.values.get(key).map(|s| s.as_str())
    }

    /// Flag value takes precedence, then the file, then the default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T> {
        self.resolve_opt(flag, key)
            .map(|opt| opt.unwrap_or(default))
    }

    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key '{key}': cannot parse '{raw}'"))),
            None => Ok(None),
        }
    }
}

/// Comma-separated integer list (for `n-list`).
pub fn parse_usize_list(raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("cannot parse '{part}' as an integer")))
        })
        .collect()
}

/// Comma-separated float list (for `m-list`).
pub fn parse_f64_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("cannot parse '{part}' as a number")))
        })
        .collect()
}
