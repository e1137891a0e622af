//! Flat `key = value` text files used for every configuration surface.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// Ordered key/value pairs. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    context: String,
}

impl KeyValues {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(
                    context,
                    Some(i + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::format(context, Some(i + 1), "empty key"));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::format(
                    context,
                    Some(i + 1),
                    format!("duplicate key `{key}`"),
                ));
            }
        }
        Ok(KeyValues {
            entries,
            context: context.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// The entries whose key is in `keys`.
    pub fn subset(&self, keys: &[&str]) -> KeyValues {
        KeyValues {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| keys.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            context: self.context.clone(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parse `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!("{}: cannot parse `{key} = {v}`", self.context))
            }),
        }
    }

    /// Parse a comma-separated list under `key` if present.
    pub fn parsed_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| {
                    Error::Config(format!("{}: cannot parse list `{key} = {v}`", self.context))
                }),
        }
    }

    /// Fails on any key not in `known`, so typos do not pass silently.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        let unknown: Vec<&str> = self.keys().filter(|k| !known.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{}: unknown keys: {}",
                self.context,
                unknown.join(", ")
            )))
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse("# header\n a = 1 \n\nb=x,y # trailing\n", "t").unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.parsed::<u32>("a").unwrap(), Some(1));
        assert_eq!(
            kv.parsed_list::<String>("b").unwrap(),
            Some(vec!["x".into(), "y".into()])
        );
        assert_eq!(kv.get("c"), None);
    }

    #[test]
    fn rejects_malformed_and_duplicates() {
        assert!(KeyValues::parse("novalue\n", "t").is_err());
        assert!(KeyValues::parse("a=1\na=2\n", "t").is_err());
        let kv = KeyValues::parse("a=1\n", "t").unwrap();
        assert!(kv.reject_unknown(&["b"]).is_err());
        assert!(kv.parsed::<u32>("a").is_ok());
        let kv = KeyValues::parse("a=x\n", "t").unwrap();
        assert!(kv.parsed::<u32>("a").is_err());
    }
}
