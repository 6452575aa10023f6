//! Line-oriented `key = value` config text shared by task layouts, training
//! configs and sweep configs. `#` starts a comment; keys may repeat and keep
//! their order.

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct KvDoc {
    pub source: String,
    pub entries: Vec<Entry>,
}

impl KvDoc {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, i + 1, format!("expected `key = value`, got `{line}`")))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::parse(source, i + 1, "empty key"));
            }
            entries.push(Entry {
                line: i + 1,
                key: key.to_string(),
                value: v.trim().to_string(),
            });
        }
        Ok(Self {
            source: source.to_string(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key)
            .ok_or_else(|| Error::parse(&self.source, 0, format!("missing key `{key}`")))
    }

    pub fn err(&self, entry: &Entry, msg: impl Into<String>) -> Error {
        Error::parse(&self.source, entry.line, msg)
    }

    pub fn f64_of(&self, entry: &Entry) -> Result<f64> {
        entry
            .value
            .parse()
            .map_err(|_| self.err(entry, format!("`{}` is not a number", entry.value)))
    }

    pub fn usize_of(&self, entry: &Entry) -> Result<usize> {
        entry
            .value
            .parse()
            .map_err(|_| self.err(entry, format!("`{}` is not a count", entry.value)))
    }

    pub fn list_of<T: std::str::FromStr>(&self, entry: &Entry) -> Result<Vec<T>> {
        if entry.value.is_empty() {
            return Ok(Vec::new());
        }
        entry
            .value
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| self.err(entry, format!("bad list element `{}`", p.trim())))
            })
            .collect()
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.f64_of(self.require(key)?)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.usize_of(self.require(key)?)
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        Ok(self.require(key)?.value.as_str())
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|e| self.f64_of(e)).transpose()
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key).map(|e| self.usize_of(e)).transpose()
    }
}
