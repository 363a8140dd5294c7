//! Flat `key = value` config files. Keys are the long flag names of the
//! chosen subcommand; values are merged into the argument list unless the
//! same flag was given on the command line.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::{Cli, CliError};

/// Parsed entries in file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        let value = v.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn given(args: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag.as_str() || s.starts_with(&prefix)
    })
}

/// Expands `--config FILE` into explicit flags for the subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;

    let root = Cli::command();
    let names: Vec<String> = root.get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(sub_name) = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).find(|a| names.contains(a)) else {
        // No subcommand: let clap report it.
        return Ok(args);
    };
    let sub = root
        .find_subcommand(&sub_name)
        .expect("subcommand name comes from the command itself");

    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::config(format!("{}: config files cannot nest", path.display())));
        }
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            return Err(CliError::config(format!(
                "{}: `{sub_name}` has no flag --{key}",
                path.display()
            )));
        };
        if given(&args, &key) {
            continue;
        }
        if arg.get_action().takes_values() {
            extra.push(OsString::from(format!("--{key}")));
            extra.push(OsString::from(value));
        } else {
            match value.as_str() {
                "true" => extra.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => {
                    return Err(CliError::config(format!(
                        "{}: --{key} is a switch; expected true or false, got {other:?}",
                        path.display()
                    )))
                }
            }
        }
    }
    let mut out = args;
    // Before any `--` so the flags are not taken as positionals.
    let at = out.iter().position(|a| a == "--").unwrap_or(out.len());
    out.splice(at..at, extra);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let got = parse("# comment\nseed = 7\n\nrate=2000\nout = \"a b.csv\"\n").unwrap();
        assert_eq!(
            got,
            vec![
                ("seed".into(), "7".into()),
                ("rate".into(), "2000".into()),
                ("out".into(), "a b.csv".into())
            ]
        );
        assert!(parse("nonsense\n").is_err());
        assert!(parse(" = 3\n").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.conf");
        std::fs::write(&file, "seed = 9\nevents = 40\nverify = true\n").unwrap();
        let args: Vec<OsString> = ["rsplab", "gen", "--config", file.to_str().unwrap(), "--seed", "3"]
            .iter()
            .map(OsString::from)
            .collect();
        let err = expand(args.clone()).unwrap_err();
        assert_eq!(err.code, 2, "gen has no --verify");
        std::fs::write(&file, "seed = 9\nevents = 40\n").unwrap();
        let out: Vec<String> = expand(args)
            .unwrap()
            .into_iter()
            .map(|a| a.into_string().unwrap())
            .collect();
        assert_eq!(out[4..], ["--seed", "3", "--events", "40"]);
    }
}
