//! Flat `key = value` configuration file. Comments and unknown keys survive a
//! load/save round trip.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_CONFIG: &str = "memsa.conf";

#[derive(Debug, Clone, PartialEq)]
enum Line {
    Entry(String, String),
    Other(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigStore {
    path: PathBuf,
    lines: Vec<Line>,
}

impl ConfigStore {
    pub fn empty(path: impl Into<PathBuf>) -> Self {
        ConfigStore {
            path: path.into(),
            lines: Vec::new(),
        }
    }

    /// Read `path`; a missing file is an empty store.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text, path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::empty(path)),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                lines.push(Line::Other(raw.to_string()));
                continue;
            }
            let (key, value) = t
                .split_once('=')
                .ok_or_else(|| Error::parse(path, k + 1, "expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::parse(path, k + 1, format!("bad key {key:?}")));
            }
            lines.push(Line::Entry(key.to_string(), value.trim().to_string()));
        }
        Ok(ConfigStore {
            path: path.to_path_buf(),
            lines,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Last value bound to `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().rev().find_map(|l| match l {
            Line::Entry(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "{}: bad value {v:?} for `{key}`",
                        self.path.display()
                    ))
                })
            })
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        let mut replaced = false;
        for l in &mut self.lines {
            if let Line::Entry(k, v) = l {
                if k == key {
                    *v = value.clone();
                    replaced = true;
                }
            }
        }
        if !replaced {
            self.lines.push(Line::Entry(key.to_string(), value));
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            match l {
                Line::Entry(k, v) => out.push_str(&format!("{k} = {v}\n")),
                Line::Other(s) => {
                    out.push_str(s);
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Write through a temporary file so a failed save leaves the old file intact.
    pub fn save(&self) -> Result<()> {
        let tmp = self.path.with_extension("conf.tmp");
        std::fs::write(&tmp, self.to_text()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &self.path).map_err(|e| Error::io(&self.path, e))
    }
}
