//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Keys accepted in a configuration file (flag names without the dashes).
pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "G",
    "N",
    "tol-picard",
    "tol-bc",
    "tol-brho",
    "out",
    "mu",
    "qdot0",
    "t-end",
    "dt",
    "snapshot-times",
    "profile",
    "mu-min",
    "mu-max",
    "steps",
    "jobs",
    "max-residual",
    "max-equivalence",
    "max-bc",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment line, `_` and `-` are
    /// interchangeable in keys.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key '{key}'", lineno + 1));
            }
            let value = value.trim().trim_matches('"').to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(format!("config line {}: duplicate key '{key}'", lineno + 1));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("config key '{key}': cannot parse '{v}'")),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = Config::parse("# run\nmodel = builtin:kappa=3100\nN = 256\ntol_bc = 1e-9\n\n").unwrap();
        assert_eq!(c.raw("model"), Some("builtin:kappa=3100"));
        assert_eq!(c.get::<usize>("N").unwrap(), Some(256));
        assert_eq!(c.get::<f64>("tol-bc").unwrap(), Some(1e-9));
        assert_eq!(c.get::<f64>("mu").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Config::parse("N 256").is_err());
        assert!(Config::parse("colour = red").is_err());
        assert!(Config::parse("N = 1\nN = 2").is_err());
        assert!(Config::parse("N = many").unwrap().get::<usize>("N").is_err());
    }
}
