//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use the long
//! flag names with `-` or `_` (`mc-samples` and `mc_samples` are the same
//! key). Values given on the command line take precedence.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "encoding",
    "n",
    "eta",
    "dark",
    "alpha",
    "beta",
    "alpha_b",
    "beta_b",
    "ideal",
    "format",
    "out",
    "seed",
    "mc_samples",
    "chain",
    "dump",
    "plot_data",
    "minimal",
    "no_number_resolving",
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected key = value",
                    i + 1
                )));
            };
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key {key:?}",
                    i + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses `key` with `parse`, reporting the key on failure.
    pub fn parsed<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| parse(v).map_err(|e| CliError::Usage(format!("config key {key}: {e}"))))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.parsed(key, parse_bool)?.unwrap_or(false))
    }
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected a boolean, got {other:?}")),
    }
}

/// Comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_aliases() {
        let c =
            ConfigFile::parse("# sweep\nencoding = klm,pol\nmc-samples=10\n\n n = 2,3 \n").unwrap();
        assert_eq!(c.get("encoding"), Some("klm,pol"));
        assert_eq!(c.get("mc_samples"), Some("10"));
        assert_eq!(
            c.parsed("n", parse_list::<usize>).unwrap(),
            Some(vec![2, 3])
        );
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("no equals sign").is_err());
    }

    #[test]
    fn booleans() {
        let c = ConfigFile::parse("ideal = yes\ndump = off").unwrap();
        assert!(c.flag("ideal").unwrap());
        assert!(!c.flag("dump").unwrap());
        assert!(!c.flag("minimal").unwrap());
        assert!(ConfigFile::parse("ideal = maybe")
            .unwrap()
            .flag("ideal")
            .is_err());
    }
}
