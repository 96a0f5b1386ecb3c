//! Parameter resolution: flags over config file over defaults.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

/// Keys a config file may set for every command.
pub const COMMON_KEYS: &[&str] = &["seed", "threads", "format"];

pub fn load_file(path: Option<&str>) -> Result<Map<String, Value>, Failure> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {path}: {e}")))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Failure::config(format!("{path}: expected a JSON object"))),
        Err(e) => Err(Failure::config(format!("{path}: {e}"))),
    }
}

/// Overlay the config file and then the flags on `defaults`.
///
/// Flag structs serialize unset options as `null`, which are skipped. Keys in
/// the file that neither the command nor [`COMMON_KEYS`] knows are an error.
pub fn resolve<P, F>(defaults: P, file: &Map<String, Value>, flags: &F) -> Result<P, Failure>
where
    P: Serialize + DeserializeOwned,
    F: Serialize,
{
    let Value::Object(mut merged) = serde_json::to_value(defaults).expect("params serialize to an object") else {
        unreachable!("params are structs")
    };
    for (k, v) in file {
        if COMMON_KEYS.contains(&k.as_str()) {
            continue;
        }
        if !merged.contains_key(k) {
            return Err(Failure::config(format!("unknown config key '{k}'")));
        }
        merged.insert(k.clone(), v.clone());
    }
    if let Value::Object(f) = serde_json::to_value(flags).expect("flags serialize to an object") {
        for (k, v) in f {
            if !v.is_null() && merged.contains_key(&k) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::config(format!("bad parameter: {e}")))
}

/// Hex SHA-256 of the canonical (sorted-key) JSON of `v`.
pub fn config_hash(v: &Value) -> String {
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
