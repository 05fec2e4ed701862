//! `genvar`: command-line experiments. Each run writes `<out>/<command>.csv`
//! and a key=value sidecar `<out>/<command>.meta`.
//!
//! Exit status: 0 success, 1 invalid input, 2 numerical failure.

mod args;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(genvar::Error),
    Io(String),
    /// Artifacts were written but some rows failed numerically.
    Partial(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_validation() => 1,
            CliError::Lib(_) | CliError::Io(_) | CliError::Partial(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Partial(m) => write!(f, "some rows failed: {m}"),
        }
    }
}

impl From<genvar::Error> for CliError {
    fn from(e: genvar::Error) -> Self {
        CliError::Lib(e)
    }
}

fn out_dir(flag: Option<String>, from_config: Option<String>) -> PathBuf {
    flag.or_else(|| std::env::var("GENVAR_OUT").ok().filter(|s| !s.is_empty()))
        .or(from_config)
        .unwrap_or_else(|| "genvar-out".into())
        .into()
}

fn dispatch(cmd: &Command) -> Result<(commands::Run, Vec<(String, String)>), CliError> {
    use output::config_echo;
    Ok(match cmd {
        Command::Mollifier(a) => (commands::mollifier(a)?, config_echo(a)),
        Command::Regularize(a) => (commands::regularize(a)?, config_echo(a)),
        Command::Order(a) => (commands::order(a)?, config_echo(a)),
        Command::DiffeoCheck(a) => (commands::diffeo_check(a)?, config_echo(a)),
        Command::LieCheck(a) => (commands::lie_check(a)?, config_echo(a)),
        Command::HoExtremal(a) => (commands::ho_extremal_cmd(a)?, config_echo(a)),
        Command::HoTable(a) => (commands::ho_table_cmd(a)?, config_echo(a)),
        Command::ScalarCheck(a) => (commands::scalar_check(a)?, config_echo(a)),
        Command::Propagate(a) => (commands::propagate(a)?, config_echo(a)),
        Command::QuadPi(a) => (commands::quad_pi(a)?, config_echo(a)),
    })
}

fn run() -> Result<(), CliError> {
    let (argv, config_out) = config::expand_args(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string()));
        }
    };
    let name = cli.command.name();
    let dir = out_dir(cli.out.clone(), config_out);
    let t0 = Instant::now();
    let (result, echo) = dispatch(&cli.command)?;
    let elapsed = t0.elapsed();
    let mut meta = vec![
        ("command".to_string(), name.to_string()),
        ("genvar_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    if let Some(c) = &cli.config {
        meta.push(("config_file".into(), c.clone()));
    }
    meta.extend(echo);
    meta.push(("elapsed_ms".into(), format!("{:.3}", elapsed.as_secs_f64() * 1e3)));
    let written = output::write(&dir, name, &result.artifact, meta)?;
    println!("{name}: {} rows -> {}", result.artifact.rows.len(), written.csv.display());
    for (k, v) in &result.artifact.summary {
        println!("  {k} = {v}");
    }
    println!("  metadata -> {}", written.meta.display());
    match result.failure {
        Some(f) => Err(CliError::Partial(f)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let text = e.to_string();
            eprintln!("genvar: {}", text.trim_end());
            ExitCode::from(e.code())
        }
    }
}
