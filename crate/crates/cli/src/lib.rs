//! Batch front end for `spp-core`: one subcommand per data product, CSV output
//! with a parameter echo, and a manifest beside every file.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use serde::Serialize;

pub use args::{Cli, Command, PrismCommand};
pub use error::{CliError, Result};

use commands::Report;

/// Files written by one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub manifest: PathBuf,
    pub extra: Vec<PathBuf>,
    pub rows: usize,
    pub warnings: Vec<String>,
}

fn params_table<T: Serialize>(args: &T) -> Result<toml::Table> {
    toml::Table::try_from(args).map_err(|e| CliError::usage(format!("cannot echo parameters: {e}")))
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("SPP_THREADS") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::usage(format!("SPP_THREADS must be an integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

/// Parses arguments (merging any config file) and runs the command.
pub fn run_from<I, T>(argv: I) -> Result<RunSummary>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(config::parse(argv)?)
}

pub fn run(cli: Cli) -> Result<RunSummary> {
    let common = cli.command.common().clone();
    let name = cli.command.path().join("-");
    let threads = thread_count(common.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    let (report, params, seed) = pool.install(|| -> Result<(Report, toml::Table, Option<u64>)> {
        Ok(match &cli.command {
            Command::Sigma(a) => (commands::sigma(a)?, params_table(a)?, None),
            Command::Dispersion(a) => (commands::dispersion(a)?, params_table(a)?, None),
            Command::Prism(PrismCommand::ReflectanceMap(a)) => (commands::reflectance_map(a)?, params_table(a)?, None),
            Command::Prism(PrismCommand::BetaSweep(a)) => (commands::beta_sweep(a)?, params_table(a)?, None),
            Command::Propagate(a) => (commands::propagate(a)?, params_table(a)?, None),
            Command::Qec(a) => (commands::qec(a)?, params_table(a)?, Some(a.seed)),
        })
    })?;

    let out = common.out.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let header = output::header(&name, &params);
    output::write(&out, &report.main.render(&header))?;
    let mut extra = Vec::new();
    for (suffix, table) in &report.extra {
        let p = output::sibling(&out, suffix);
        output::write(&p, &table.render(&header))?;
        extra.push(p);
    }

    let mut manifest = toml::Table::new();
    manifest.insert("command".into(), name.clone().into());
    manifest.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    manifest.insert("output".into(), out.display().to_string().into());
    manifest.insert("rows".into(), (report.main.rows.len() as i64).into());
    if let Some(s) = seed {
        // TOML integers are signed; the seed is echoed as text to keep all u64 values.
        manifest.insert("seed".into(), s.to_string().into());
    }
    manifest.insert("threads".into(), (rayon_threads(&pool) as i64).into());
    manifest.insert(
        "extra_outputs".into(),
        toml::Value::Array(extra.iter().map(|p| p.display().to_string().into()).collect()),
    );
    manifest.insert("warnings".into(), toml::Value::Array(report.warnings.iter().map(|w| w.clone().into()).collect()));
    manifest.insert("parameters".into(), params.into());
    let manifest_path = output::sibling(&out, "manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| CliError::usage(format!("manifest: {e}")))?;
    output::write(&manifest_path, &text)?;

    Ok(RunSummary { output: out, manifest: manifest_path, extra, rows: report.main.rows.len(), warnings: report.warnings })
}

fn rayon_threads(pool: &rayon::ThreadPool) -> usize {
    pool.current_num_threads()
}
