//! Line-oriented `key = value` settings file. Flags on the command line take
//! precedence over anything read here.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "solver",
    "p",
    "lambda",
    "c",
    "tol",
    "max_iter",
    "rho",
    "epsilon",
    "seed",
    "bins",
    "out",
    "threads",
    "grid_points",
    "grid_low",
    "grid_high",
    "grid_values",
    "subjects",
    "images",
    "width",
    "height",
    "kinds",
    "rank",
    "severity",
    "name",
];

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, Some(path))
    }

    /// `#` starts a comment; blank lines are skipped. Unknown or repeated
    /// keys are errors.
    pub fn parse(text: &str, path: Option<&Path>) -> CliResult<Self> {
        let origin = path.map_or_else(|| "config".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!("{origin}:{}: expected key = value", n + 1)));
            };
            let (key, value) = (key.trim().replace('-', "_"), value.trim().to_string());
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("{origin}:{}: unknown key '{key}'", n + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::usage(format!("{origin}:{}: key '{key}' repeated", n + 1)));
            }
        }
        Ok(ConfigFile {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| parse_value(key, v, self.path.as_deref()))
            .transpose()
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| parse_value(key, item.trim(), self.path.as_deref()))
                    .collect()
            })
            .transpose()
    }

    /// The command-line value if given, else the file's, else `None`.
    pub fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, path: Option<&Path>) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| {
        let origin = path.map_or_else(|| "config".to_string(), |p| p.display().to_string());
        CliError::usage(format!("{origin}: bad value '{value}' for {key}: {e}"))
    })
}

/// A real number or `auto`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn value(self) -> Option<f64> {
        match self {
            AutoOr::Auto => None,
            AutoOr::Value(v) => Some(v),
        }
    }
}

impl FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(AutoOr::Value(v)),
            _ => Err(format!("expected a positive number or 'auto', got '{s}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ConfigFile::parse("# settings\nsolver = wsnm\np = 0.8, 0.95\n\nmax-iter=40 # cap\n", None).unwrap();
        assert_eq!(cfg.raw("solver"), Some("wsnm"));
        assert_eq!(cfg.get_list::<f64>("p").unwrap(), Some(vec![0.8, 0.95]));
        assert_eq!(cfg.get::<usize>("max_iter").unwrap(), Some(40));
        assert_eq!(cfg.pick(Some(7usize), "max_iter").unwrap(), Some(7));
        assert_eq!(cfg.get::<f64>("tol").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_repeated_and_malformed() {
        assert!(ConfigFile::parse("colour = red", None).is_err());
        assert!(ConfigFile::parse("tol = 1\ntol = 2", None).is_err());
        assert!(ConfigFile::parse("tol", None).is_err());
        let cfg = ConfigFile::parse("tol = fast", None).unwrap();
        assert!(cfg.get::<f64>("tol").is_err());
    }

    #[test]
    fn auto_or_value() {
        assert_eq!("auto".parse::<AutoOr>().unwrap(), AutoOr::Auto);
        assert_eq!("0.25".parse::<AutoOr>().unwrap(), AutoOr::Value(0.25));
        assert!("-1".parse::<AutoOr>().is_err());
        assert!("x".parse::<AutoOr>().is_err());
    }
}
