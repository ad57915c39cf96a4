//! `key = value` config files, merged into the argument list so that flags
//! given on the command line take precedence.

use std::fs;
use std::path::Path;

use crate::UsageError;

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, UsageError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(UsageError(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn has_flag(args: &[String], key: &str) -> bool {
    let flag = format!("--{}", key);
    let prefix = format!("--{}=", key);
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Appends config entries whose flag is not already present. Boolean
/// entries (`true`/`false`) become bare flags or are dropped.
pub fn merge_config(args: Vec<String>) -> Result<Vec<String>, UsageError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| UsageError(format!("cannot read config {}: {}", path, e)))?;
    let mut merged = args.clone();
    for (key, value) in parse_config(&text)? {
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(format!("--{}", key)),
            "false" => {}
            _ => merged.push(format!("--{}={}", key, value)),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parses_and_merges() {
        let kv = parse_config("# c\nseed = 3\nlearning_rate=0.01 # x\n\nverbose = true\n").unwrap();
        assert_eq!(kv[1], ("learning-rate".to_string(), "0.01".to_string()));
        assert!(parse_config("oops").is_err());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "seed = 3\nepochs = 4\nflag = true\noff = false\n").unwrap();
        let args = argv(&format!("constprobe train --config {} --seed 9", p.display()));
        let merged = merge_config(args.clone()).unwrap();
        assert_eq!(&merged[..args.len()], args.as_slice());
        assert_eq!(&merged[args.len()..], &["--epochs=4".to_string(), "--flag".to_string()]);
        assert_eq!(merge_config(argv("constprobe train")).unwrap(), argv("constprobe train"));
        assert!(merge_config(argv("constprobe --config /nonexistent/x train")).is_err());
    }
}
