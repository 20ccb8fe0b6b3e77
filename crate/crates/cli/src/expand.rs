//! Turning JSON objects into command-line flags (`--manifest` files and
//! experiment stages share this path).

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// `--key value` pairs for every entry; `true` becomes a bare switch, `false`
/// and `null` are dropped, arrays are comma-joined.
pub fn to_flags(args: &BTreeMap<String, Value>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (k, v) in args {
        let flag = format!("--{}", flag_name(k));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::String(s) => out.extend([flag, s.clone()]),
            Value::Number(n) => out.extend([flag, n.to_string()]),
            Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|i| match i {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        other => bail!("unsupported list element {other} for key {k:?}"),
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => bail!("nested object for key {k:?} cannot be a flag"),
        }
    }
    Ok(out)
}

fn manifest_path(argv: &[String]) -> Option<String> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--manifest" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--manifest=").map(str::to_string)
        }
    })
}

/// Appends the flags of a `--manifest FILE` object, skipping any flag that is
/// already given explicitly.
pub fn expand_manifest(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = manifest_path(&argv) else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading manifest {path}"))?;
    let obj: BTreeMap<String, Value> = serde_json::from_str(&text).with_context(|| format!("manifest {path} must be a JSON object"))?;
    let present = |k: &str| {
        let flag = format!("--{}", flag_name(k));
        argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let fresh: BTreeMap<String, Value> = obj.into_iter().filter(|(k, _)| !present(k)).collect();
    let mut out = argv;
    out.extend(to_flags(&fresh)?);
    Ok(out)
}
