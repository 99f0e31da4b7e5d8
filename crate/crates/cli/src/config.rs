//! Flat TOML config files, merged by splicing their entries in as flags ahead of
//! the real command line so that explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{CommandFactory, Parser};

use crate::args::{Cli, Command, CommonArgs, PrismCommand};
use crate::error::{CliError, Result};

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Sigma(a) => &a.common,
            Command::Dispersion(a) => &a.common,
            Command::Prism(PrismCommand::ReflectanceMap(a)) => &a.common,
            Command::Prism(PrismCommand::BetaSweep(a)) => &a.common,
            Command::Propagate(a) => &a.common,
            Command::Qec(a) => &a.common,
        }
    }

    /// Subcommand path, e.g. `["prism", "beta-sweep"]`.
    pub fn path(&self) -> Vec<&'static str> {
        match self {
            Command::Sigma(_) => vec!["sigma"],
            Command::Dispersion(_) => vec!["dispersion"],
            Command::Prism(PrismCommand::ReflectanceMap(_)) => vec!["prism", "reflectance-map"],
            Command::Prism(PrismCommand::BetaSweep(_)) => vec!["prism", "beta-sweep"],
            Command::Propagate(_) => vec!["propagate"],
            Command::Qec(_) => vec!["qec"],
        }
    }
}

fn config_error(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_path_buf(), reason: reason.into() }
}

fn scalar(path: &Path, key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(format!("{f:e}")),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(config_error(path, format!("`{key}` must be a scalar or a flat array"))),
    }
}

/// Flags equivalent to the entries of `table` for the subcommand at `sub_path`.
/// Keys whose flag appears in `explicit` are skipped, so command-line values replace
/// rather than extend list-valued entries.
pub fn table_to_flags(
    table: &toml::Table,
    sub_path: &[&str],
    explicit: &[String],
    path: &Path,
) -> Result<Vec<OsString>> {
    let mut cmd = Cli::command();
    for name in sub_path {
        cmd = cmd
            .find_subcommand(name)
            .cloned()
            .ok_or_else(|| config_error(path, format!("unknown subcommand `{name}`")))?;
    }
    let mut flags = Vec::new();
    for (key, value) in table {
        if key == "seed" {
            return Err(config_error(path, "`seed` must be passed as --seed on the command line"));
        }
        if key == "config" {
            return Err(config_error(path, "config files cannot include other config files"));
        }
        let long = key.replace('_', "-");
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()))
            .ok_or_else(|| config_error(path, format!("unknown key `{key}`")))?;
        if explicit.iter().any(|id| id == arg.get_id().as_str()) {
            continue;
        }
        if !arg.get_action().takes_values() {
            match value {
                toml::Value::Boolean(true) => flags.push(OsString::from(format!("--{long}"))),
                toml::Value::Boolean(false) => {}
                _ => return Err(config_error(path, format!("`{key}` must be true or false"))),
            }
            continue;
        }
        let text = match value {
            toml::Value::Array(items) => {
                items.iter().map(|v| scalar(path, key, v)).collect::<Result<Vec<_>>>()?.join(",")
            }
            v => scalar(path, key, v)?,
        };
        flags.push(OsString::from(format!("--{long}={text}")));
    }
    Ok(flags)
}

/// Parses `argv`, then re-parses with the `--config` file's entries spliced in.
pub fn parse<I, T>(argv: I) -> Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    let Some(path) = cli.command.common().config.clone() else {
        return Ok(cli);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_error(&path, e.to_string()))?;
    let sub = cli.command.path();
    let explicit = explicit_ids(&argv, &sub)?;
    let flags = table_to_flags(&table, &sub, &explicit, &path)?;
    let split = 1 + sub.len();
    if argv.len() < split {
        return Err(CliError::usage("missing subcommand"));
    }
    let mut merged = argv[..split].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&argv[split..]);
    Ok(Cli::try_parse_from(merged)?)
}

/// Argument ids given on the command line for the subcommand at `sub_path`.
fn explicit_ids(argv: &[OsString], sub_path: &[&str]) -> Result<Vec<String>> {
    let mut m = &Cli::command().try_get_matches_from(argv)?;
    for name in sub_path {
        m = m.subcommand_matches(name).ok_or_else(|| CliError::usage("missing subcommand"))?;
    }
    Ok(m.ids()
        .filter(|id| m.value_source(id.as_str()) == Some(ValueSource::CommandLine))
        .map(|id| id.as_str().to_owned())
        .collect())
}
