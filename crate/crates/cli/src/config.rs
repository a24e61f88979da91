//! Layering of defaults, a flat TOML file, universal flags and trailing
//! `--key value` overrides into one typed configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

/// A problem with the configuration, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<coalesce::Error> for ConfigError {
    fn from(e: coalesce::Error) -> Self {
        Self(e.to_string())
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

/// Settings that apply to every command and are not experiment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Universal {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT_DIR: &str = "reports";

pub fn read_table(path: &Path) -> ConfigResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    text.parse::<Table>().map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// Parses trailing `--key value` and `--key=value` words. Keys may use
/// hyphens for underscores.
pub fn parse_overrides(words: &[String]) -> ConfigResult<Table> {
    let mut table = Table::new();
    let mut it = words.iter();
    while let Some(word) = it.next() {
        let Some(key) = word.strip_prefix("--") else {
            return Err(ConfigError(format!("unexpected argument `{word}`")));
        };
        let (key, raw) = match key.split_once('=') {
            Some((k, v)) => (k, v.to_owned()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError(format!("`--{key}` needs a value")))?;
                (key, v.clone())
            }
        };
        table.insert(key.replace('-', "_"), parse_value(&raw));
    }
    Ok(table)
}

/// A TOML literal if it parses as one, else a comma-separated list, else a string.
pub fn parse_value(raw: &str) -> Value {
    let literal = |s: &str| -> Option<Value> { format!("v = {s}").parse::<Table>().ok().and_then(|mut t| t.remove("v")) };
    if let Some(v) = literal(raw) {
        return v;
    }
    if raw.contains(',') {
        let items: Option<Vec<Value>> = raw.split(',').map(|s| literal(s.trim())).collect();
        if let Some(items) = items {
            return Value::Array(items);
        }
    }
    Value::String(raw.to_owned())
}

/// Removes the universal keys from `table`, flags taking precedence over the file.
pub fn take_universal(table: &mut Table, seed: Option<u64>, out_dir: Option<PathBuf>, workers: Option<usize>) -> ConfigResult<Universal> {
    let file_seed = match table.remove("seed") {
        Some(Value::Integer(s)) if s >= 0 => Some(s as u64),
        Some(other) => return Err(ConfigError(format!("seed must be a nonnegative integer, got {other}"))),
        None => None,
    };
    let file_out = match table.remove("out_dir") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(ConfigError(format!("out_dir must be a string, got {other}"))),
        None => None,
    };
    let file_workers = match table.remove("workers") {
        Some(Value::Integer(w)) if w >= 1 => Some(w as usize),
        Some(other) => return Err(ConfigError(format!("workers must be a positive integer, got {other}"))),
        None => None,
    };
    let workers = workers.or(file_workers);
    if workers == Some(0) {
        return Err(ConfigError("workers must be at least 1".into()));
    }
    Ok(Universal {
        seed: seed.or(file_seed).unwrap_or(DEFAULT_SEED),
        out_dir: out_dir.or(file_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        workers,
    })
}

/// Overlays `layer` onto the serialized `base` and deserializes the result.
/// Unknown keys are rejected by the target type.
pub fn merge<T: Serialize + DeserializeOwned>(base: &T, layer: Table) -> ConfigResult<T> {
    let mut table = match Value::try_from(base) {
        Ok(Value::Table(t)) => t,
        Ok(_) => return Err(ConfigError("configuration is not a table".into())),
        Err(e) => return Err(ConfigError(e.to_string())),
    };
    for (k, v) in layer {
        table.insert(k, v);
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError(e.message().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse_as_literals_lists_or_strings() {
        assert_eq!(parse_value("3"), Value::Integer(3));
        assert_eq!(parse_value("0.5"), Value::Float(0.5));
        assert_eq!(parse_value("[1, 2]"), Value::Array(vec![Value::Integer(1), Value::Integer(2)]));
        assert_eq!(parse_value("1,2.5"), Value::Array(vec![Value::Integer(1), Value::Float(2.5)]));
        assert_eq!(parse_value("bm"), Value::String("bm".into()));
        assert_eq!(parse_value("-0.4,0.1"), Value::Array(vec![Value::Float(-0.4), Value::Float(0.1)]));
    }

    #[test]
    fn overrides_accept_both_spellings() {
        let words: Vec<String> = ["--null-draws", "20", "--t=2"].iter().map(|s| s.to_string()).collect();
        let t = parse_overrides(&words).unwrap();
        assert_eq!(t["null_draws"], Value::Integer(20));
        assert_eq!(t["t"], Value::Integer(2));
        assert!(parse_overrides(&["--t".to_string()]).is_err());
        assert!(parse_overrides(&["t".to_string()]).is_err());
    }

    #[test]
    fn flags_beat_file_for_universal_keys() {
        let mut t: Table = "seed = 5\nout_dir = \"x\"\nworkers = 2\nh = 0.1".parse().unwrap();
        let u = take_universal(&mut t, Some(9), None, None).unwrap();
        assert_eq!(u.seed, 9);
        assert_eq!(u.out_dir, PathBuf::from("x"));
        assert_eq!(u.workers, Some(2));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn merge_keeps_defaults_and_rejects_unknown_keys() {
        let base = coalesce::experiments::Wedge::default();
        let mut layer = Table::new();
        layer.insert("gap".into(), Value::Integer(2));
        let merged = merge(&base, layer).unwrap();
        assert_eq!(merged.gap, 2.0);
        assert_eq!(merged.h, base.h);
        let mut bad = Table::new();
        bad.insert("gapp".into(), Value::Integer(2));
        assert!(merge(&base, bad).is_err());
    }
}
