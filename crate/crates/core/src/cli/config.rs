//! Line-based `key = value` configuration files with `[section]` headers.
//!
//! Grammar: blank lines and `#`-comments are ignored; a line `[name]` opens a
//! section; other lines are `key = value` within the current section. Values
//! are plain strings; list values are comma-separated. Keys are unique per
//! section (later wins).

use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value` or `[section]`: {1:?}")]
    Syntax(usize, String),
    #[error("missing key `{key}` in section [{section}]")]
    Missing { section: String, key: String },
    #[error("[{section}] {key} = {value:?}: {detail}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        detail: String,
    },
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Config {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax(lineno + 1, raw.to_string()));
            };
            sections
                .entry(current.clone())
                .or_default()
                .insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Config { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<f64, ConfigError> {
        let v = self.require(section, key)?;
        v.parse().map_err(|e| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: v.into(),
            detail: format!("{e}"),
        })
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(_) => self.f64(section, key),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let v = self.require(section, key)?;
        v.parse().map_err(|e| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: v.into(),
            detail: format!("{e}"),
        })
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(_) => self.usize(section, key),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                detail: format!("{e}"),
            }),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                section: section.into(),
                key: key.into(),
                value: v.into(),
                detail: "expected true/false".into(),
            }),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
        let Some(v) = self.get(section, key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e| ConfigError::BadValue {
                    section: section.into(),
                    key: key.into(),
                    value: s.into(),
                    detail: format!("{e}"),
                })
            })
            .collect()
    }
}
