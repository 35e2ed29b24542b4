//! Flat `key = value` defaults files.
//!
//! Each entry becomes a `--key value` flag placed ahead of the flags given
//! on the command line, so explicit flags win.

use std::fs;
use std::path::Path;

use crate::CliError;

/// Parses a defaults file. Blank lines and lines starting with `#` are
/// skipped; keys may use `_` or `-`.
pub fn parse_defaults(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Splices defaults from any `--config FILE` option into the argument list,
/// right after the subcommand name.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut config_path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
            config_path = Some(path);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            config_path = Some(path.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config_path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| CliError::Io(path.clone(), e))?;
    let defaults = parse_defaults(&text)?;
    // program name, then the verb, then defaults, then the user's flags
    let verb_at = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1);
    let Some(verb_at) = verb_at else {
        return Ok(rest);
    };
    let mut out: Vec<String> = rest[..=verb_at].to_vec();
    for (key, value) in defaults {
        out.push(format!("--{key}"));
        out.push(value);
    }
    out.extend_from_slice(&rest[verb_at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs() {
        let d = parse_defaults("# comment\nnum_states = 500\n\nprotocol=GHZ2\n").unwrap();
        assert_eq!(d, vec![("num-states".into(), "500".into()), ("protocol".into(), "GHZ2".into())]);
        assert!(parse_defaults("nonsense").is_err());
    }
}
