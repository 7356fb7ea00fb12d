//! Job files: a JSON object with a `command` key and one key per flag.
//!
//! ```json
//! {"command": "periods", "f": "sin(t1)", "eps": 1e-6,
//!  "domain": "0:100:1001", "tau": "0:50:5001", "l": [7]}
//! ```
//!
//! Keys map to `--key` (underscores become dashes). Arrays repeat the flag,
//! `true` sets a switch, `false` and `null` are skipped. The job is parsed by
//! the same command-line parser, so defaults and validation are shared.

use serde_json::{Map, Value};

pub fn job_to_argv(text: &str) -> Result<Vec<String>, String> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("job file is not valid JSON: {e}"))?;
    let Value::Object(map) = value else {
        return Err("job file must contain a JSON object".into());
    };
    let command = match map.get("command") {
        Some(Value::String(c)) if c != "run" => c.clone(),
        Some(Value::String(_)) => return Err("a job cannot run another job".into()),
        _ => return Err("job needs a string `command`".into()),
    };
    let mut argv = vec!["ap".to_string(), command];
    push_flags(&map, &mut argv)?;
    Ok(argv)
}

fn push_flags(map: &Map<String, Value>, argv: &mut Vec<String>) -> Result<(), String> {
    for (key, value) in map {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => argv.push(flag),
            Value::Array(items) => {
                for item in items {
                    argv.push(format!("{flag}={}", scalar(key, item)?));
                }
            }
            other => argv.push(format!("{flag}={}", scalar(key, other)?)),
        }
    }
    Ok(())
}

fn scalar(key: &str, value: &Value) -> Result<String, String> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(format!("unsupported value for `{key}`: {value}")),
    }
}
