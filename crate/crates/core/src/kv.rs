//! Plain-text `key = value` documents with optional `[section]` headers.
//!
//! ```text
//! # comment
//! seed = 7
//! [channel]
//! nominal_voltages = 1.4, 2.6, 3.2, 3.93
//! ```
//!
//! Keys are addressed by their dotted path (`channel.nominal_voltages`);
//! keys before the first header live in the root section (no prefix).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KvError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse `{value}`: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown key `{0}`")]
    Unknown(String),
}

/// A parsed document: ordered map from dotted key path to raw value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    entries: BTreeMap<String, String>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| KvError::Syntax {
                    line: idx + 1,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(KvError::Syntax {
                        line: idx + 1,
                        message: format!("invalid section name `{name}`"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| KvError::Syntax {
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(KvError::Syntax {
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            let path = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries.insert(path.clone(), value.trim().to_string()).is_some() {
                return Err(KvError::Syntax {
                    line: idx + 1,
                    message: format!("duplicate key `{path}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| KvError::Invalid {
                key: key.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            }),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, KvError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| KvError::Missing(key.to_string()))
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, KvError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        if v.is_empty() {
            return Ok(Some(Vec::new()));
        }
        v.split(',')
            .map(|item| {
                item.trim().parse::<T>().map_err(|e| KvError::Invalid {
                    key: key.to_string(),
                    value: item.trim().to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Reject any key that is not in `allowed`.
    pub fn check_known(&self, allowed: &[&str]) -> Result<(), KvError> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(KvError::Unknown(k.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for KvDocument {
    /// Canonical rendering: root keys first, then one block per section.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut current: Option<&str> = None;
        let (root, nested): (Vec<_>, Vec<_>) =
            self.entries.iter().partition(|(k, _)| !k.contains('.'));
        for (k, v) in root {
            writeln!(f, "{k} = {v}")?;
        }
        for (k, v) in nested {
            let (section, key) = k.split_once('.').expect("partitioned on '.'");
            if current != Some(section) {
                writeln!(f, "[{section}]")?;
                current = Some(section);
            }
            writeln!(f, "{key} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let doc = KvDocument::parse(
            "seed = 3 # trailing\n\n[channel]\nq = 2\nlevels = 1.0, 2.5\n[out]\npath=x.csv\n",
        )
        .unwrap();
        assert_eq!(doc.require::<u64>("seed").unwrap(), 3);
        assert_eq!(doc.require::<u32>("channel.q").unwrap(), 2);
        assert_eq!(
            doc.get_list::<f64>("channel.levels").unwrap().unwrap(),
            vec![1.0, 2.5]
        );
        assert_eq!(doc.raw("out.path"), Some("x.csv"));
    }

    #[test]
    fn reports_line_of_syntax_error() {
        let err = KvDocument::parse("a = 1\nnot a pair\n").unwrap_err();
        assert_eq!(
            err,
            KvError::Syntax {
                line: 2,
                message: "expected `key = value`".into()
            }
        );
    }

    #[test]
    fn invalid_value_names_key() {
        let doc = KvDocument::parse("[x]\nn = abc").unwrap();
        let err = doc.require::<u32>("x.n").unwrap_err();
        assert!(err.to_string().contains("x.n"), "{err}");
    }

    #[test]
    fn display_round_trips() {
        let text = "seed = 3\n[a]\nk = 1\n[b]\nk = 2\n";
        let doc = KvDocument::parse(text).unwrap();
        assert_eq!(KvDocument::parse(&doc.to_string()).unwrap(), doc);
    }
}
