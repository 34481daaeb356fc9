//! Optional `key = value` config files. Keys mirror the long flag names
//! of the subcommand; an explicit flag always overrides the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    /// Reads and parses the file when a path is given; `#` starts a
    /// comment, blank lines are skipped, keys must be unique.
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", p.display())))?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::usage(format!(
                        "{}:{}: expected 'key = value', got '{raw}'",
                        p.display(),
                        idx + 1
                    ))
                })?;
                let key = key.trim().to_string();
                let value = value.trim().to_string();
                if key.is_empty() || value.is_empty() {
                    return Err(CliError::usage(format!(
                        "{}:{}: empty key or value",
                        p.display(),
                        idx + 1
                    )));
                }
                if map.insert(key.clone(), value).is_some() {
                    return Err(CliError::usage(format!(
                        "{}: duplicate key '{key}'",
                        p.display()
                    )));
                }
            }
        }
        Ok(Config { map })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    /// Errors on leftover keys so typos never pass silently.
    pub fn finish(self) -> Result<(), CliError> {
        match self.map.keys().next() {
            Some(k) => Err(CliError::usage(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Flag value if given, else the config value for `key`, else None.
pub fn resolve<T>(flag: Option<T>, cfg: &mut Config, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        cfg.take(key);
        return Ok(flag);
    }
    match cfg.take(key) {
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::usage(format!("config key '{key}': {e}"))),
        None => Ok(None),
    }
}
