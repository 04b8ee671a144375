//! Config files supply default flag values. Two formats are accepted: a JSON object, or flat
//! `key = value` lines with `#` comments. Keys use flag names with `_` or `-`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Splices flags from a `--config` file into `args`, right after the subcommand. Flags already
/// given on the command line are skipped, so the command line wins.
pub fn merge_config(args: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let entries = load(&path)?;
    let given: HashSet<String> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut injected = Vec::new();
    for (key, value) in entries {
        let flag = key.trim().replace('_', "-");
        if flag == "config" || given.contains(&flag) {
            continue;
        }
        match value.as_str() {
            "true" => injected.push(format!("--{flag}")),
            "false" => {}
            _ => injected.push(format!("--{flag}={value}")),
        }
    }
    // args[0] is the program, args[1] the subcommand when present
    let at = if args.len() > 1 && !args[1].starts_with('-') { 2 } else { args.len() };
    let mut out = args;
    out.splice(at..at, injected);
    Ok(out)
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn load(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |detail: String| CliError::ConfigParse {
        path: path.to_path_buf(),
        detail,
    };
    if text.trim_start().starts_with('{') {
        let map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        map.into_iter()
            .map(|(k, v)| Ok((k.clone(), json_scalar(&v).ok_or_else(|| bad(format!("unsupported value for `{k}`")))?)))
            .collect()
    } else {
        text.lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("").trim();
                (!line.is_empty()).then_some((i + 1, line))
            })
            .map(|(no, line)| {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| bad(format!("line {no}: expected key = value")))?;
                Ok((k.trim().to_string(), v.trim().trim_matches('"').to_string()))
            })
            .collect()
    }
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    use serde_json::Value;
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(items) => items.iter().map(json_scalar).collect::<Option<Vec<_>>>().map(|v| v.join(",")),
        _ => None,
    }
}
