//! JSON configs with dotted `key.path=value` overrides.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};

pub fn load(path: Option<&Path>) -> Result<Value> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            if !v.is_object() {
                bail!("config {} must be a JSON object", p.display());
            }
            Ok(v)
        }
        None => Ok(Value::Object(Map::new())),
    }
}

/// Value text is parsed as JSON when possible, otherwise kept as a string.
pub fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("malformed key path {path:?}");
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .with_context(|| format!("cannot descend into non-object at {key:?} in {path:?}"))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => bail!("cannot set {path:?}: parent is not an object"),
    }
}

/// Applies `key.path=value` assignments in order.
pub fn apply_sets(root: &mut Value, sets: &[String]) -> Result<()> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .with_context(|| format!("--set expects key.path=value, got {s:?}"))?;
        set_path(root, k.trim(), parse_value(v.trim()))?;
    }
    Ok(())
}

pub fn set_default(root: &mut Value, key: &str, value: Value) {
    if let Some(obj) = root.as_object_mut() {
        obj.entry(key.to_string()).or_insert(value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dotted_paths_create_and_replace() {
        let mut v = json!({"a_n": 0, "process": {"kind": "ar1_nonmixing"}});
        apply_sets(&mut v, &["a_n=3".into(), "process.scale=10".into(), "x.y.z=abc".into()]).unwrap();
        assert_eq!(v, json!({"a_n": 3, "process": {"kind": "ar1_nonmixing", "scale": 10}, "x": {"y": {"z": "abc"}}}));
        assert!(apply_sets(&mut v, &["a_n.b=1".into()]).is_err());
        assert!(apply_sets(&mut v, &["novalue".into()]).is_err());
    }
}
