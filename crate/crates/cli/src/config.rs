//! Flat `key = value` run files. Command-line flags take precedence over
//! file values; section headers are accepted and ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A violated precondition on the inputs; maps to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalise(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(usage(format!("config line {}: expected key = value, got {raw:?}", n + 1)));
            };
            let v = v.split(" #").next().unwrap_or("").trim();
            values.insert(normalise(k), v.trim_matches('"').to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config file {}: {e}", p.display())))?;
                ConfigFile::parse(&text)
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalise(key)).map(String::as_str)
    }

    /// Flag value if given, else the file value parsed as `T`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse::<T>()
                .map(Some)
                .map_err(|e| usage(format!("config key {key} = {s:?}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<T>
    where
        T::Err: fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| usage(format!("missing required parameter --{}", key.replace('_', "-"))))
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}
