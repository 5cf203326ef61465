//! Flat `key = value` configuration files. `#` starts a comment line.

use std::collections::BTreeMap;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ParseError::new(
                    "config",
                    Some(i + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ParseError::new(
                    "config",
                    Some(i + 1),
                    format!("invalid key `{k}`"),
                ));
            }
            if let Some(prev) = cfg.lines.insert(k.to_string(), i + 1) {
                return Err(ParseError::new(
                    k,
                    Some(i + 1),
                    format!("duplicate key (first set on line {prev})"),
                ));
            }
            cfg.entries.insert(k.to_string(), v.to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn err(&self, key: &str, msg: String) -> Error {
        Error::Parse(ParseError::new(key, self.lines.get(key).copied(), msg))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| {
                    self.err(
                        key,
                        format!("cannot parse `{v}` as {}", std::any::type_name::<T>()),
                    )
                })
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| self.err(key, format!("cannot parse list item `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Rejects keys outside `allowed`, naming the first offender.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            None => Ok(()),
            Some(k) => Err(self.err(
                k,
                format!("unknown key; expected one of: {}", allowed.join(", ")),
            )),
        }
    }

    /// SHA-256 of the canonical `key=value` lines in key order. `threads`
    /// is left out since results do not depend on it.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries.iter().filter(|(k, _)| k.as_str() != "threads") {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        format!("{:x}", h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_types() {
        let c =
            Config::parse("# study\nmodels = oracle, var2\nn_rep=10\n\nalpha = 0.25\n").unwrap();
        assert_eq!(c.get::<usize>("n_rep").unwrap(), Some(10));
        assert_eq!(
            c.list::<String>("models").unwrap().unwrap(),
            vec!["oracle", "var2"]
        );
        assert_eq!(c.get_or("seed", 3u64).unwrap(), 3);
        assert!(c.check_keys(&["models", "n_rep"]).is_err());
        assert!(c.check_keys(&["models", "n_rep", "alpha"]).is_ok());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Config::parse("a = 1\nnonsense\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = Config::parse("a = 1\na = 2\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let c = Config::parse("\nn_rep = ten\n").unwrap();
        match c.get::<usize>("n_rep").unwrap_err() {
            Error::Parse(p) => assert_eq!((p.path.as_str(), p.line), ("n_rep", Some(2))),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn hash_ignores_layout_but_not_values() {
        let a = Config::parse("x = 1\ny = 2").unwrap();
        let b = Config::parse("# c\ny=2\n\nx =1").unwrap();
        let c = Config::parse("x = 1\ny = 3").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.set("threads", 4);
        assert_eq!(a.hash(), d.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
