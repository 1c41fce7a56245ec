//! Flat `key = value` configuration with `[section]` headers.
//!
//! The format is line-based: blank lines and `#` comments are skipped,
//! `[name]` opens a section, everything else must be `key = value`. Values
//! keep no type; typed access parses on demand so a config echoes back
//! exactly as written. `parse(serialize(c)) == c` holds structurally.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    bail!("line {lineno}: unterminated section header");
                };
                let name = name.trim();
                if name.is_empty() {
                    bail!("line {lineno}: empty section name");
                }
                if sections.contains_key(name) {
                    bail!("line {lineno}: duplicate section [{name}]");
                }
                current = name.to_string();
                sections.insert(current.clone(), BTreeMap::new());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {lineno}: expected `key = value`, got {line:?}");
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("line {lineno}: empty key");
            }
            if current.is_empty() {
                bail!("line {lineno}: key {key:?} before any [section]");
            }
            let slot = sections.get_mut(&current).expect("section opened above");
            if slot.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {lineno}: duplicate key {key:?} in [{current}]");
            }
        }
        Ok(Config { sections })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (name, keys) in &self.sections {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (key, value) in keys {
                let _ = writeln!(out, "{key} = {value}");
            }
        }
        out
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl std::fmt::Display) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// All keys of one section, for exhaustive consumers like `[check]`.
    pub fn section(&self, name: &str) -> BTreeMap<String, String> {
        self.sections.get(name).cloned().unwrap_or_default()
    }

    pub fn as_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.sections).expect("string maps always serialize")
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key)
            .map(|v| v.parse().with_context(|| format!("[{section}] {key} = {v:?}: not a number")))
            .transpose()
    }

    pub fn u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.get(section, key)
            .map(|v| v.parse().with_context(|| format!("[{section}] {key} = {v:?}: not an integer")))
            .transpose()
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|v| v.parse().with_context(|| format!("[{section}] {key} = {v:?}: not a count")))
            .transpose()
    }

    pub fn bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.get(section, key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => bail!("[{section}] {key} = {other:?}: not a boolean"),
            })
            .transpose()
    }

    pub fn list_f64(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|v| {
                parse_list(v).with_context(|| format!("[{section}] {key} = {v:?}: bad list"))
            })
            .transpose()
    }
}

/// Comma-separated numbers; an item `a..b` expands to the doubling ladder
/// `a, 2a, 4a, ...` up to and including `b`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            bail!("empty list item");
        }
        if let Some((lo, hi)) = item.split_once("..") {
            let lo: f64 = lo.trim().parse().with_context(|| format!("range start {lo:?}"))?;
            let hi: f64 = hi.trim().parse().with_context(|| format!("range end {hi:?}"))?;
            if !(lo > 0.0 && hi >= lo) {
                bail!("range {item:?} must satisfy 0 < start <= end");
            }
            let mut x = lo;
            while x <= hi * (1.0 + 1e-12) {
                out.push(x);
                x *= 2.0;
            }
        } else {
            out.push(item.parse().with_context(|| format!("list item {item:?}"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_sections_comments_and_values() {
        let text = "# header comment\n[run]\nscenario = rt-hyperbolic\nseed = 7\n\n[lattice]\nn = 8,16\n";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.get("run", "scenario"), Some("rt-hyperbolic"));
        assert_eq!(cfg.u64("run", "seed").unwrap(), Some(7));
        assert_eq!(cfg.list_f64("lattice", "n").unwrap().unwrap(), vec![8.0, 16.0]);
        assert_eq!(cfg.get("lattice", "missing"), None);
        assert_eq!(cfg.f64("run", "absent").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("key = 1").is_err());
        assert!(Config::parse("[run]\nno equals sign").is_err());
        assert!(Config::parse("[run\nk = 1").is_err());
        assert!(Config::parse("[run]\nk = 1\nk = 2").is_err());
        assert!(Config::parse("[run]\nk = 1\n[run]\nj = 2").is_err());
        assert!(Config::parse("[run]\nseed = x").unwrap().u64("run", "seed").is_err());
    }

    #[test]
    fn range_items_expand_by_doubling() {
        assert_eq!(parse_list("8..512").unwrap(), vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0]);
        assert_eq!(parse_list("1, 4..16, 3").unwrap(), vec![1.0, 4.0, 8.0, 16.0, 3.0]);
        assert!(parse_list("16..8").is_err());
        assert!(parse_list("").is_err());
    }

    proptest! {
        #[test]
        fn round_trips_exactly(
            entries in proptest::collection::vec(
                ("[a-z][a-z0-9_]{0,8}", "[a-z][a-z0-9_]{0,8}", "[ -~&&[^#=\\[\\]]]{0,12}"),
                0..24,
            )
        ) {
            let mut cfg = Config::default();
            for (section, key, value) in &entries {
                cfg.set(section, key, value.trim());
            }
            let text = cfg.serialize();
            let back = Config::parse(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
