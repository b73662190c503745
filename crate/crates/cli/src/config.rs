//! One TOML file per experiment. Each subcommand reads the table named
//! after it (or the top-level table when that section is absent), then
//! applies `--key value` overrides from the command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::CliError;

#[derive(Debug)]
pub struct Config {
    table: Table,
    base_dir: PathBuf,
    // Keys set on the command line; their paths resolve against the
    // working directory instead of the config file's directory.
    overridden: BTreeSet<String>,
}

impl Config {
    pub fn load(path: &Path, section: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut root: Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let table = match root.remove(section) {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(CliError::usage(format!("[{section}] must be a table"))),
            None => root.into_iter().filter(|(_, v)| !v.is_table()).collect(),
        };
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let config = Config {
            table,
            base_dir,
            overridden: BTreeSet::new(),
        };
        config.check_keys(allowed)?;
        Ok(config)
    }

    /// Applies `--key value` and `--key=value` pairs. Values are read as TOML
    /// literals when possible and as bare strings otherwise.
    pub fn apply_overrides(&mut self, args: &[String], allowed: &[&str]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let flag = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::usage(format!("expected --key value, found '{arg}'")))?;
            let (key, raw) = match flag.split_once('=') {
                Some((k, v)) => (k, v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::usage(format!("--{flag} needs a value")))?;
                    (flag, v.clone())
                }
            };
            self.set(&key.replace('-', "_"), parse_value(&raw));
        }
        self.check_keys(allowed)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.overridden.insert(key.to_string());
        self.table.insert(key.to_string(), value);
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::usage(format!(
                "unknown key '{k}' (expected one of: {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(type_error(key, "a string", v)),
        }
    }

    pub fn require_str(&self, key: &str) -> Result<&str, CliError> {
        self.str(key)?
            .ok_or_else(|| CliError::usage(format!("missing required key '{key}'")))
    }

    pub fn uint(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(type_error(key, "a nonnegative integer", v)),
        }
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(type_error(key, "a number", v)),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(type_error(key, "true or false", v)),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.str(key)?.map(|s| self.resolve(key, s)))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.path(key)?
            .ok_or_else(|| CliError::usage(format!("missing required key '{key}'")))
    }

    /// A list of paths; a single string counts as a one-element list.
    pub fn paths(&self, key: &str) -> Result<Option<Vec<PathBuf>>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(vec![self.resolve(key, s)])),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(self.resolve(key, s)),
                    other => Err(type_error(key, "a list of strings", other)),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Err(type_error(key, "a list of strings", v)),
        }
    }

    fn resolve(&self, key: &str, s: &str) -> PathBuf {
        let p = PathBuf::from(s);
        if p.is_absolute() || self.overridden.contains(key) {
            p
        } else {
            self.base_dir.join(p)
        }
    }
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn type_error(key: &str, want: &str, got: &Value) -> CliError {
    CliError::usage(format!("key '{key}' must be {want}, found {got}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str, section: &str, allowed: &[&str]) -> Result<Config, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        Config::load(&path, section, allowed)
    }

    #[test]
    fn sections_and_top_level() {
        let c = config("[sweep]\nfamily = \"metric\"\n", "sweep", &["family"]).unwrap();
        assert_eq!(c.str("family").unwrap(), Some("metric"));
        let c = config("family = \"metric\"\n", "sweep", &["family"]).unwrap();
        assert_eq!(c.str("family").unwrap(), Some("metric"));
    }

    #[test]
    fn overrides_parse_literals() {
        let mut c = config("[g]\nseed = 1\n", "g", &["seed", "name", "theta"]).unwrap();
        let args: Vec<String> = ["--seed", "9", "--name", "abc", "--theta=0.25"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        c.apply_overrides(&args, &["seed", "name", "theta"])
            .unwrap();
        assert_eq!(c.uint("seed").unwrap(), Some(9));
        assert_eq!(c.str("name").unwrap(), Some("abc"));
        assert_eq!(c.float("theta").unwrap(), Some(0.25));
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert!(config("[g]\nsede = 1\n", "g", &["seed"]).is_err());
        let c = config("[g]\nseed = \"x\"\n", "g", &["seed"]).unwrap();
        assert!(c.uint("seed").is_err());
        let mut c = config("[g]\n", "g", &["seed"]).unwrap();
        assert!(c
            .apply_overrides(&["--seed".to_string()], &["seed"])
            .is_err());
        assert!(c.apply_overrides(&["seed".to_string()], &["seed"]).is_err());
    }
}
