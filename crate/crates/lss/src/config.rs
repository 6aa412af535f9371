//! Flat `key = value` files mirroring the command-line flags.
//!
//! Keys are long flag names without the dashes (`alpha2`, `T`, `spin-up`).
//! Lists are comma-separated. `true` turns a switch on and `false` leaves it
//! off. Blank lines and lines starting with `#` are ignored.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = key.trim().trim_start_matches('-');
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("invalid key `{}`", key),
            });
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// The entries as command-line arguments.
pub fn to_args(entries: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value.clone());
            }
        }
    }
    args
}
