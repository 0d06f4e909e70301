//! Flat `key=value` config files. Keys are flag names without the leading
//! dashes (`t-steps` or `t_steps`); `command` names the subcommand.
//! Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use crate::CliError;

pub const SUBCOMMANDS: [&str; 8] = ["sweep", "slice", "measure", "tubes", "moll", "regularity", "line-kakeya", "verify"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::invalid("--config", format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::invalid("--config", format!("line {}: empty key", i + 1)));
        }
        if key == "config" {
            return Err(CliError::invalid("--config", "config files cannot include other config files"));
        }
        entries.push(ConfigEntry { key, value: v.trim().to_string() });
    }
    Ok(entries)
}

/// Renders arguments back into config text; the inverse of [`parse_config`].
pub fn render_config(command: &str, entries: &[ConfigEntry]) -> String {
    let mut s = format!("command={command}\n");
    for e in entries {
        s.push_str(&format!("{}={}\n", e.key, e.value));
    }
    s
}

fn config_path(argv: &[String]) -> Result<Option<(usize, usize, PathBuf)>, CliError> {
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            let p = argv.get(i + 1).ok_or_else(|| CliError::invalid("--config", "missing value"))?;
            return Ok(Some((i, 2, PathBuf::from(p))));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some((i, 1, PathBuf::from(p))));
        }
    }
    Ok(None)
}

/// Replaces `--config PATH` by the flags it holds, placed before the
/// explicit flags so that those override it.
pub fn expand_config(argv: &[String]) -> Result<Vec<String>, CliError> {
    let Some((at, width, path)) = config_path(argv)? else {
        return Ok(argv.to_vec());
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let entries = parse_config(&text)?;
    let mut rest: Vec<String> = argv[..at].iter().chain(&argv[at + width..]).cloned().collect();
    expand_entries(&mut rest, &entries, &path)
}

fn expand_entries(rest: &mut Vec<String>, entries: &[ConfigEntry], path: &Path) -> Result<Vec<String>, CliError> {
    let explicit = rest.iter().position(|a| SUBCOMMANDS.contains(&a.as_str()));
    let from_file = entries.iter().find(|e| e.key == "command").map(|e| e.value.clone());
    let command = match (explicit, from_file) {
        (Some(i), Some(f)) if rest[i] != f => {
            return Err(CliError::invalid(
                "--config",
                format!("`{}` selects `{f}` but the command line says `{}`", path.display(), rest[i]),
            ));
        }
        (Some(i), _) => rest.remove(i),
        (None, Some(f)) => f,
        (None, None) => {
            return Err(CliError::invalid("--config", format!("`{}` has no `command` and none was given", path.display())));
        }
    };
    let mut out = vec![command];
    for e in entries.iter().filter(|e| e.key != "command") {
        match e.value.as_str() {
            "true" => out.push(format!("--{}", e.key)),
            "false" => {}
            v => {
                out.push(format!("--{}", e.key));
                out.push(v.to_string());
            }
        }
    }
    out.append(rest);
    Ok(out)
}
