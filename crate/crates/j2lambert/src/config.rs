//! Optional TOML settings file mirroring the command-line flags.
//!
//! Keys are flag names without the leading dashes. Top-level keys apply to
//! every subcommand; a `[gen]`, `[train]`, ... table overrides them for one
//! subcommand. Flags given on the command line always win.

use std::path::Path;
use std::str::FromStr;

use toml::{Table, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    table: Table,
    origin: String,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
            Error::format(origin, line, e.message())
        })?;
        Ok(Settings {
            table,
            origin: origin.display().to_string(),
        })
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&Value> {
        self.table
            .get(section)
            .and_then(Value::as_table)
            .and_then(|t| t.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    /// The setting as text: strings verbatim, arrays joined with commas.
    pub fn raw(&self, section: &str, key: &str) -> Option<String> {
        fn text(v: &Value) -> String {
            match v {
                Value::String(s) => s.clone(),
                Value::Array(items) => items.iter().map(text).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            }
        }
        self.lookup(section, key).map(text)
    }

    /// `flag` if given, else the parsed setting.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(section, key)
            .map(|s| {
                s.parse().map_err(|e| {
                    Error::Usage(format!("{}: setting `{key}` = `{s}`: {e}", self.origin))
                })
            })
            .transpose()
    }

    pub fn flag(&self, flag: bool, section: &str, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, section, key)?.unwrap_or(false))
    }
}
