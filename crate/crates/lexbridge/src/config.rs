//! Flat `key = value` config files. Lines starting with `#` are comments;
//! values may be bare or quoted. Command-line flags override file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{LexError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LexError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| LexError::parse(path, lineno, "expected key = value"))?;
            let key = key.trim();
            let mut value = value.trim();
            if value.len() >= 2
                && ((value.starts_with('"') && value.ends_with('"'))
                    || (value.starts_with('\'') && value.ends_with('\'')))
            {
                value = &value[1..value.len() - 1];
            }
            if key.is_empty() {
                return Err(LexError::parse(path, lineno, "empty key"));
            }
            values.insert(key.to_owned(), value.to_owned());
        }
        Ok(ConfigFile { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                LexError::InvalidInput(format!("config key `{key}`: bad value `{v}`"))
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Flag value if present, else config value, else default.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

/// Flag value if present, else config value.
pub fn resolve_opt<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// Like `resolve_opt` but the value must come from somewhere.
pub fn resolve_required<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
) -> Result<T> {
    resolve_opt(flag, cfg, key)?.ok_or_else(|| {
        LexError::InvalidInput(format!(
            "missing required option `{}` (flag --{} or config key)",
            key,
            key.replace('_', "-")
        ))
    })
}
