//! Flat `key = value` config files, merged under the command line.

use std::path::Path;

use gcar::{GcarError, Result};

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str, path: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line.split_once('=').ok_or_else(|| GcarError::Parse {
            path: path.to_string(),
            line: k + 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(GcarError::Parse {
                path: path.to_string(),
                line: k + 1,
                msg: "empty key".into(),
            });
        }
        out.push((key, val.trim().to_string()));
    }
    Ok(out)
}

/// Turn config entries into `--key value` arguments. Booleans become bare
/// flags when true and are dropped when false.
pub fn config_args(entries: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (k, v) in entries {
        match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" => args.push(format!("--{k}")),
            "false" | "no" | "off" => {}
            _ => {
                args.push(format!("--{k}"));
                args.push(v.clone());
            }
        }
    }
    args
}

/// Find `--config <path>` (or `--config=<path>`) in raw arguments.
pub fn find_config_path(args: &[String]) -> Option<String> {
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

/// Insert arguments from the config file right after the subcommand name so
/// that anything given on the command line overrides them.
pub fn merge_config_args(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = find_config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))?;
    let extra = config_args(&parse_config(&text, &path)?);
    // args[0] is the program, args[1] the subcommand
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes_keys() {
        let c = parse_config("# run\nburn_in = 100\n\nseed=7 # trailing\nemit-raw-draws = true\nx = false\n", "c").unwrap();
        assert_eq!(
            config_args(&c),
            vec!["--burn-in", "100", "--seed", "7", "--emit-raw-draws"]
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(parse_config("seed 7", "c"), Err(GcarError::Parse { line: 1, .. })));
    }

    #[test]
    fn finds_config_flag() {
        let a: Vec<String> = ["gcar", "fit", "--config=run.cfg"].iter().map(|s| s.to_string()).collect();
        assert_eq!(find_config_path(&a).as_deref(), Some("run.cfg"));
    }
}
