//! key=value config files, spliced into the argument list ahead of the
//! command-line flags so that the flags win.

use std::collections::BTreeMap;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::CliError;

#[derive(Debug, Default)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub out: Option<String>,
    pub entries: BTreeMap<String, String>,
}

pub fn parse_config(text: &str, origin: &str) -> Result<ConfigFile, CliError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{origin}:{}: expected key=value, got `{line}`", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        let val = v.trim().to_string();
        let slot = match key.as_str() {
            "experiment" => &mut cfg.experiment,
            "out" => &mut cfg.out,
            _ => {
                if cfg.entries.insert(key.clone(), val).is_some() {
                    return Err(CliError::Usage(format!("{origin}:{}: duplicate key `{key}`", i + 1)));
                }
                continue;
            }
        };
        if slot.replace(val).is_some() {
            return Err(CliError::Usage(format!("{origin}:{}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(cfg)
}

/// Removes `--config FILE` / `--config=FILE` and returns the file name.
fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--" {
            break;
        }
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("--config needs a file name".into()));
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(v) = args[i].strip_prefix("--config=") {
            found = Some(v.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Rewrites the argument list so that config entries become flags of the
/// chosen subcommand. Returns the new list and the config's output directory.
pub fn expand_args(mut args: Vec<String>) -> Result<(Vec<String>, Option<String>), CliError> {
    let Some(path) = take_config_flag(&mut args)? else {
        return Ok((args, None));
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let cfg = parse_config(&text, &path)?;
    let cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let pos = args.iter().skip(1).position(|a| names.contains(a)).map(|p| p + 1);
    let (pos, sub_name) = match (pos, &cfg.experiment) {
        (Some(p), Some(e)) if &args[p] != e => {
            return Err(CliError::Usage(format!("config experiment `{e}` conflicts with subcommand `{}`", args[p])));
        }
        (Some(p), _) => (p, args[p].clone()),
        (None, Some(e)) => {
            if !names.contains(e) {
                return Err(CliError::Usage(format!("unknown experiment `{e}` in {path}")));
            }
            args.insert(1, e.clone());
            (1, e.clone())
        }
        (None, None) => return Err(CliError::Usage(format!("no subcommand given and {path} has no `experiment` key"))),
    };
    let sub = cmd.find_subcommand(&sub_name).expect("listed subcommand");
    let mut flags = Vec::new();
    for (key, val) in &cfg.entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && !a.is_global_set())
            .ok_or_else(|| CliError::Usage(format!("unknown key `{key}` for {sub_name} in {path}")))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match val.as_str() {
                "true" | "1" | "yes" => flags.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => return Err(CliError::Usage(format!("key `{key}` in {path} needs true or false"))),
            }
        } else {
            flags.push(format!("--{key}={val}"));
        }
    }
    let tail = args.split_off(pos + 1);
    args.extend(flags);
    args.extend(tail);
    Ok((args, cfg.out))
}
