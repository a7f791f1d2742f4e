//! Line-oriented `key = value` configuration files: `#` starts a comment
//! line, blank lines are skipped, keys may not repeat, and every key must be
//! consumed (unknown keys are reported rather than ignored).

use crate::error::{CliError, CliResult};
use std::str::FromStr;

pub struct KeyVals {
    pairs: Vec<(String, String)>,
}

impl KeyVals {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Usage(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
            pairs.push((key, value));
        }
        Ok(Self { pairs })
    }

    /// Removes and returns the raw value for `key`, if present.
    pub fn take(&mut self, key: &str) -> Option<String> {
        let idx = self.pairs.iter().position(|(k, _)| k == key)?;
        Some(self.pairs.remove(idx).1)
    }

    /// Removes and parses the value for `key`, if present.
    pub fn take_parsed<T>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Usage(format!("key {key:?}: cannot parse {raw:?}: {e}"))
            }),
        }
    }

    /// Like `take_parsed` but the key must be present.
    pub fn require_parsed<T>(&mut self, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.take_parsed(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required key {key:?}")))
    }

    /// Fails when unconsumed keys remain, listing them in file order.
    pub fn finish(self) -> CliResult<()> {
        if self.pairs.is_empty() {
            return Ok(());
        }
        let names: Vec<&str> = self.pairs.iter().map(|(k, _)| k.as_str()).collect();
        Err(CliError::Usage(format!(
            "unknown key(s): {}",
            names.join(", ")
        )))
    }
}

/// Splits a comma-separated value into exactly `n` parsed fields.
pub fn parse_fields<T>(raw: &str, n: usize, what: &str) -> CliResult<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(CliError::Usage(format!(
            "{what}: expected {n} comma-separated fields, got {}",
            parts.len()
        )));
    }
    parts
        .into_iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|e| CliError::Usage(format!("{what}: cannot parse {p:?}: {e}")))
        })
        .collect()
}
