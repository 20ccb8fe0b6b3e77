//! Report envelopes and JSON helpers shared by every emitted report.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result, TOOLKIT_VERSION};

/// Reproduction metadata embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub toolkit_version: String,
    pub seed: u64,
    pub config: Value,
}

impl ReportMeta {
    pub fn new(seed: u64, config: Value) -> Self {
        Self { toolkit_version: TOOLKIT_VERSION.to_string(), seed, config }
    }
}

/// Serializes `+inf` as the string token `"inf"` (and `-inf` as `"-inf"`); finite values as numbers.
pub mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => super::parse_real(&s).ok_or_else(|| serde::de::Error::custom(format!("not a number: {s}"))),
        }
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// Reads a JSON number or an `"inf"` token.
pub fn value_as_real(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_real(s),
        _ => None,
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    // round-trip through Value so map keys come out sorted
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Row {
        #[serde(with = "inf_f64")]
        v: f64,
    }

    #[test]
    fn inf_token() {
        assert_eq!(serde_json::to_string(&Row { v: f64::INFINITY }).unwrap(), r#"{"v":"inf"}"#);
        assert_eq!(serde_json::to_string(&Row { v: 1.5 }).unwrap(), r#"{"v":1.5}"#);
        let r: Row = serde_json::from_str(r#"{"v":"inf"}"#).unwrap();
        assert_eq!(r.v, f64::INFINITY);
        let r: Row = serde_json::from_str(r#"{"v":2}"#).unwrap();
        assert_eq!(r.v, 2.0);
    }
}
