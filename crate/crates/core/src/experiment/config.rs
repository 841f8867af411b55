//! Flat `key = value` experiment settings.
//!
//! A config file holds one setting per line; `#` starts a comment. Command
//! line flags override the file. Every key is checked against the
//! experiment's declared parameters before anything runs.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    FloatList,
}

/// A declared experiment parameter with its default.
#[derive(Clone, Copy, Debug)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

impl Param {
    pub const fn int(key: &'static str, default: &'static str, help: &'static str) -> Self {
        Self { key, kind: Kind::Int, default, help }
    }

    pub const fn float(key: &'static str, default: &'static str, help: &'static str) -> Self {
        Self { key, kind: Kind::Float, default, help }
    }

    pub const fn floats(key: &'static str, default: &'static str, help: &'static str) -> Self {
        Self { key, kind: Kind::FloatList, default, help }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    FloatList(Vec<f64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::FloatList(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(";"))
            }
        }
    }
}

fn parse_int(s: &str) -> Option<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    // accept 1e6 and 4^13 for counts
    if let Some((b, e)) = s.split_once('^') {
        let (b, e) = (b.trim().parse::<u64>().ok()?, e.trim().parse::<u32>().ok()?);
        return b.checked_pow(e);
    }
    let f = s.parse::<f64>().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
}

fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    match kind {
        Kind::Int => parse_int(raw).map(Value::Int).ok_or_else(|| format!("expected a nonnegative integer, found {raw:?}")),
        Kind::Float => parse_float(raw).map(Value::Float).ok_or_else(|| format!("expected a number, found {raw:?}")),
        Kind::FloatList => raw
            .split([',', ';'])
            .map(|t| parse_float(t).ok_or_else(|| format!("expected a list of numbers, found {raw:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Value::FloatList),
    }
}

/// One `key = value` line of a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse_config_text(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(Error::Parse {
            line,
            msg: format!("expected `key = value`, found {content:?}"),
        })?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Parse { line, msg: "empty key".into() });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}` (first set at line {})", prev.line),
            });
        }
        out.push(Entry {
            key,
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

pub const DEFAULT_SEED: u64 = 42;
/// Default cap on declared virtual chain steps per experiment.
pub const DEFAULT_BUDGET: f64 = 1e13;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    pub budget: f64,
    pub out: PathBuf,
    pub params: BTreeMap<String, Value>,
}

enum Origin {
    Line(usize),
    Flag,
}

fn located(origin: &Origin, msg: String) -> Error {
    match origin {
        Origin::Line(line) => Error::Parse { line: *line, msg },
        Origin::Flag => Error::Config(msg),
    }
}

impl ExperimentConfig {
    /// Defaults, then the file, then flags. Flag keys may use dashes.
    pub fn resolve(name: &str, declared: &[Param], file: &[Entry], flags: &[(String, String)]) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            experiment: name.to_string(),
            seed: DEFAULT_SEED,
            workers: 1,
            budget: DEFAULT_BUDGET,
            out: PathBuf::from("out"),
            params: BTreeMap::new(),
        };
        for p in declared {
            let v = parse_value(p.kind, p.default).map_err(|m| Error::Config(format!("default for `{}`: {m}", p.key)))?;
            cfg.params.insert(p.key.to_string(), v);
        }
        let settings = file
            .iter()
            .map(|e| (e.key.clone(), e.value.clone(), Origin::Line(e.line)))
            .chain(flags.iter().map(|(k, v)| (k.replace('-', "_"), v.clone(), Origin::Flag)));
        for (key, value, origin) in settings {
            let what = match origin {
                Origin::Flag => format!("--{}", key.replace('_', "-")),
                Origin::Line(_) => format!("`{key}`"),
            };
            match key.as_str() {
                "experiment" => {
                    if value != name {
                        return Err(located(&origin, format!("config is for experiment `{value}`, not `{name}`")));
                    }
                }
                "seed" => cfg.seed = parse_int(&value).ok_or_else(|| located(&origin, format!("{what}: expected an integer seed, found {value:?}")))?,
                "workers" => {
                    cfg.workers = parse_int(&value)
                        .filter(|&w| w >= 1)
                        .ok_or_else(|| located(&origin, format!("{what}: expected a positive worker count, found {value:?}")))?
                        as usize
                }
                "budget" => {
                    cfg.budget = parse_float(&value)
                        .filter(|&b| b > 0.0)
                        .ok_or_else(|| located(&origin, format!("{what}: expected a positive step budget, found {value:?}")))?
                }
                "out" => cfg.out = PathBuf::from(value),
                _ => {
                    let p = declared.iter().find(|p| p.key == key).ok_or_else(|| {
                        let known: Vec<&str> = declared.iter().map(|p| p.key).collect();
                        located(&origin, format!("unknown key {what} for experiment `{name}` (known: {})", known.join(", ")))
                    })?;
                    let v = parse_value(p.kind, &value).map_err(|m| located(&origin, format!("{what}: {m}")))?;
                    cfg.params.insert(key, v);
                }
            }
        }
        Ok(cfg)
    }

    /// Settings that determine the results, one `key=value` per entry.
    /// Worker count and output directory are left out on purpose.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![
            format!("experiment={}", self.experiment),
            format!("seed={}", self.seed),
            format!("budget={}", self.budget),
        ];
        h.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        h
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.params
            .get(key)
            .ok_or_else(|| Error::Config(format!("experiment `{}` has no parameter `{key}`", self.experiment)))
    }

    pub fn int(&self, key: &str) -> Result<u64> {
        match self.get(key)? {
            Value::Int(v) => Ok(*v),
            other => Err(Error::Config(format!("`{key}` is not an integer: {other}"))),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Float(v) => Ok(*v),
            Value::Int(v) => Ok(*v as f64),
            Value::FloatList(v) if v.len() == 1 => Ok(v[0]),
            other => Err(Error::Config(format!("`{key}` is not a number: {other}"))),
        }
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::FloatList(v) => Ok(v.clone()),
            Value::Float(v) => Ok(vec![*v]),
            other => Err(Error::Config(format!("`{key}` is not a list: {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARAMS: &[Param] = &[
        Param::float("rho", "1", "rate"),
        Param::int("n", "1000", "level"),
        Param::floats("t_grid", "0.5,1", "times"),
    ];

    #[test]
    fn defaults_file_then_flags() {
        let file = parse_config_text("# demo\nexperiment = demo\nn = 4^5\nrho = 2 # inline\nseed = 7\n").unwrap();
        let flags = vec![("rho".to_string(), "3".to_string()), ("t-grid".to_string(), "1,2,4".to_string())];
        let c = ExperimentConfig::resolve("demo", PARAMS, &file, &flags).unwrap();
        assert_eq!(c.int("n").unwrap(), 1024);
        assert_eq!(c.float("rho").unwrap(), 3.0);
        assert_eq!(c.floats("t_grid").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(c.seed, 7);
        assert_eq!(c.header()[3..], ["n=1024", "rho=3", "t_grid=1;2;4"]);
    }

    #[test]
    fn errors_name_the_line() {
        let file = parse_config_text("n = 10\n\nbogus = 1\n").unwrap();
        match ExperimentConfig::resolve("demo", PARAMS, &file, &[]) {
            Err(Error::Parse { line: 3, msg }) => assert!(msg.contains("bogus")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config_text("a = 1\nno equals\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config_text("a = 1\na = 2\n"), Err(Error::Parse { line: 2, .. })));
        let file = parse_config_text("n = ten\n").unwrap();
        assert!(matches!(ExperimentConfig::resolve("demo", PARAMS, &file, &[]), Err(Error::Parse { line: 1, .. })));
        let file = parse_config_text("experiment = other\n").unwrap();
        assert!(matches!(ExperimentConfig::resolve("demo", PARAMS, &file, &[]), Err(Error::Parse { line: 1, .. })));
        let flags = vec![("nope".to_string(), "1".to_string())];
        assert!(matches!(ExperimentConfig::resolve("demo", PARAMS, &[], &flags), Err(Error::Config(_))));
    }
}
