//! `key=value` run configuration with flag overrides.
//!
//! Precedence is flag, then config file, then built-in default. Every key a
//! command reads is recorded, so the resolved set can be logged and echoed to
//! `run.cfg`, which parses back as a config file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const CONFIG_MAGIC: &str = "PCFG1";
pub const RUN_CONFIG_FILE: &str = "run.cfg";

/// Parses `key=value` lines. Blank lines, `#` comments and a leading
/// `PCFG1` line are skipped.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (n == 0 && line == CONFIG_MAGIC) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "config line {}: expected key=value, got {line:?}",
                n + 1
            ))
        })?;
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("config key {key:?} given twice")));
        }
    }
    Ok(out)
}

pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
    seen: BTreeSet<String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => parse_config(&fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)?,
            None => BTreeMap::new(),
        };
        Ok(Self::from_map(file))
    }

    pub fn from_map(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            resolved: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    fn take_from_file<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        self.seen.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key}: {e}"))),
        }
    }

    /// Resolves `key` from the flag, the config file or `default`.
    pub fn value<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> CliResult<T>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.seen.insert(key.to_string());
                v
            }
            None => self.take_from_file(key)?.unwrap_or(default),
        };
        self.resolved.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Like [`Settings::value`] without a default; absent keys stay `None`.
    pub fn optional<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.seen.insert(key.to_string());
                Some(v)
            }
            None => self.take_from_file(key)?,
        };
        if let Some(v) = &v {
            self.resolved.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    /// Like [`Settings::optional`] but the key must be set somewhere.
    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::usage(format!("missing required setting `{key}`")))
    }

    /// Rejects config keys that no setting consumed.
    pub fn finish(self) -> CliResult<Resolved> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.seen.contains(*k))
            .collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::usage(format!(
                "unknown config key(s): {}",
                names.join(", ")
            )));
        }
        Ok(Resolved(self.resolved))
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved(pub Vec<(String, String)>);

impl Resolved {
    pub fn render(&self) -> String {
        let mut s = format!("{CONFIG_MAGIC}\n");
        for (k, v) in &self.0 {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }

    pub fn log(&self, command: &str) {
        for (k, v) in &self.0 {
            eprintln!("[{command}] config {k}={v}");
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(RUN_CONFIG_FILE);
        fs::write(&path, self.render()).map_err(|e| CliError::io(&path, e))
    }
}
