//! Typed parameter maps shared by environments, planners and beliefs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single configuration value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    List(Vec<ParamValue>),
}

/// Key-sorted parameter map. Iteration order never depends on insertion order.
pub type ParamMap = BTreeMap<String, ParamValue>;

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Real(x) => Some(x),
            ParamValue::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParamValue::Int(i) => Some(i),
            // Accept integral reals (e.g. values sampled from a real range).
            ParamValue::Real(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Some(x as i64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            ParamValue::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[ParamValue]> {
        match self {
            ParamValue::List(v) => Some(v),
            _ => None,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ParamValue::Bool(_) => "bool",
            ParamValue::Int(_) => "integer",
            ParamValue::Real(_) => "real",
            ParamValue::Str(_) => "string",
            ParamValue::List(_) => "list",
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => f.write_str(&render_real(*x)),
            ParamValue::Str(s) => f.write_str(s),
            ParamValue::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Real(x)
    }
}

impl From<i64> for ParamValue {
    fn from(i: i64) -> Self {
        ParamValue::Int(i)
    }
}

impl From<usize> for ParamValue {
    fn from(i: usize) -> Self {
        ParamValue::Int(i as i64)
    }
}

impl From<bool> for ParamValue {
    fn from(b: bool) -> Self {
        ParamValue::Bool(b)
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Str(s.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(s: String) -> Self {
        ParamValue::Str(s)
    }
}

/// Renders a finite real as its shortest round-trip decimal in positional
/// notation, always containing a `.`. Negative zero renders as `0.0`.
pub fn render_real(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("unknown parameter `{key}` for `{owner}` (accepted: {accepted})")]
    Unknown {
        owner: String,
        key: String,
        accepted: String,
    },
    #[error("parameter `{key}` of `{owner}` must be a {expected}, got {got}")]
    WrongType {
        owner: String,
        key: String,
        expected: &'static str,
        got: &'static str,
    },
    #[error("parameter `{key}` of `{owner}` is invalid: {reason}")]
    Invalid {
        owner: String,
        key: String,
        reason: String,
    },
    #[error("missing required parameter `{key}` for `{owner}`")]
    Missing { owner: String, key: String },
}

/// Reads typed values out of a [`ParamMap`], tracking which keys were used so
/// that leftovers can be reported as unknown.
pub struct ParamReader<'a> {
    owner: &'a str,
    map: &'a ParamMap,
    seen: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    pub fn new(owner: &'a str, map: &'a ParamMap) -> Self {
        Self {
            owner,
            map,
            seen: Vec::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a ParamValue> {
        self.seen.push(key);
        self.map.get(key)
    }

    fn wrong(&self, key: &str, expected: &'static str, got: &ParamValue) -> ParamError {
        ParamError::WrongType {
            owner: self.owner.to_string(),
            key: key.to_string(),
            expected,
            got: got.kind(),
        }
    }

    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ParamError {
        ParamError::Invalid {
            owner: self.owner.to_string(),
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub fn real(&mut self, key: &'static str, default: f64) -> Result<f64, ParamError> {
        Ok(self.opt_real(key)?.unwrap_or(default))
    }

    pub fn opt_real(&mut self, key: &'static str) -> Result<Option<f64>, ParamError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                Some(_) => Err(self.invalid(key, "must be finite")),
                None => Err(self.wrong(key, "real", v)),
            },
        }
    }

    pub fn int(&mut self, key: &'static str, default: i64) -> Result<i64, ParamError> {
        Ok(self.opt_int(key)?.unwrap_or(default))
    }

    pub fn opt_int(&mut self, key: &'static str) -> Result<Option<i64>, ParamError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_i64().map(Some).ok_or_else(|| self.wrong(key, "integer", v)),
        }
    }

    pub fn usize_at_least(
        &mut self,
        key: &'static str,
        default: usize,
        min: usize,
    ) -> Result<usize, ParamError> {
        let v = self.int(key, default as i64)?;
        if v < min as i64 {
            return Err(self.invalid(key, format!("must be at least {min}, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn boolean(&mut self, key: &'static str, default: bool) -> Result<bool, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.wrong(key, "bool", v)),
        }
    }

    pub fn string(&mut self, key: &'static str, default: &str) -> Result<String, ParamError> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| self.wrong(key, "string", v)),
        }
    }

    pub fn opt_list(&mut self, key: &'static str) -> Result<Option<&'a [ParamValue]>, ParamError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_list().map(Some).ok_or_else(|| self.wrong(key, "list", v)),
        }
    }

    pub fn real_list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>, ParamError> {
        let Some(items) = self.opt_list(key)? else {
            return Ok(None);
        };
        items
            .iter()
            .map(|v| match v.as_f64() {
                Some(x) if x.is_finite() => Ok(x),
                _ => Err(self.wrong(key, "list of finite reals", v)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn int_list(&mut self, key: &'static str) -> Result<Option<Vec<i64>>, ParamError> {
        let Some(items) = self.opt_list(key)? else {
            return Ok(None);
        };
        items
            .iter()
            .map(|v| v.as_i64().ok_or_else(|| self.wrong(key, "list of integers", v)))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Fails on any key that was never requested.
    pub fn finish(self) -> Result<(), ParamError> {
        for key in self.map.keys() {
            if !self.seen.iter().any(|s| s == key) {
                let mut accepted: Vec<&str> = self.seen.clone();
                accepted.sort_unstable();
                accepted.dedup();
                return Err(ParamError::Unknown {
                    owner: self.owner.to_string(),
                    key: key.clone(),
                    accepted: accepted.join(", "),
                });
            }
        }
        Ok(())
    }
}
