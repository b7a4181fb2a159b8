//! Flat key-value config files with `[section]` headers.
//!
//! Grammar: blank lines and `#` comments are ignored; a `[name]` line opens
//! a section; every other line is `key = value`. Unknown sections or keys
//! are rejected so a typo cannot silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use gambler_core::ClockKind;

/// Known sections and the keys each one accepts.
const SCHEMA: &[(&str, &[&str])] = &[
    ("experiment", &["name"]),
    (
        "model",
        &[
            "family", "n", "rate", "c", "r", "k", "d", "depth", "m", "dim", "alpha", "weights",
            "path",
        ],
    ),
    ("run", &["clock", "replicates", "times", "seed", "threads"]),
    ("solver", &["m_z", "t_step", "t_max"]),
    ("output", &["dir"]),
];

/// Raw parsed config: section -> key -> value string.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    bail!("line {}: unknown section [{name}]", lineno + 1);
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let section = section
                .clone()
                .ok_or_else(|| anyhow!("line {}: key before any [section]", lineno + 1))?;
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap();
            if !allowed.contains(&key.as_str()) {
                bail!("line {}: unknown key `{key}` in [{section}]", lineno + 1);
            }
            if values
                .insert((section.clone(), key.clone()), value)
                .is_some()
            {
                bail!("line {}: duplicate key `{key}` in [{section}]", lineno + 1);
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn set(&mut self, section: &str, key: &str, value: String) {
        self.values
            .insert((section.to_string(), key.to_string()), value);
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    pub fn get_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| anyhow!("[{section}] {key} = {v}: {e}")),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        self.parsed(section, key, default)
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        self.parsed(section, key, default)
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        self.parsed(section, key, default)
    }

    pub fn times_or(&self, default: &[f64]) -> Result<Vec<f64>> {
        match self.get("run", "times") {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| anyhow!("[run] times element {s}: {e}"))
                })
                .collect(),
        }
    }

    pub fn clock(&self) -> Result<ClockKind> {
        match self.get_or("run", "clock", "exponential") {
            "exponential" => Ok(ClockKind::Exponential),
            "uniform" => Ok(ClockKind::UniformTimeChange),
            other => bail!("[run] clock = {other}: expected exponential or uniform"),
        }
    }

    /// Render the fully resolved config (after defaults and flag overrides)
    /// for embedding into output JSON.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .map(|((s, k), v)| (format!("{s}.{k}"), v.clone()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut last: Option<&str> = None;
        for ((section, key), value) in &self.values {
            if last != Some(section.as_str()) {
                if last.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                last = Some(section);
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}
