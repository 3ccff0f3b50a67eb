//! Batch front end: `toric-spectra <command> --config <path> [--out <dir>] [--threads N]`.
//!
//! Exit codes: 0 on success, 1 for configuration and I/O errors, 2 for
//! numerical failures.

pub mod config;
pub mod emit;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use config::{load_config, RunConfig};
pub use emit::{emit_outputs, FieldDump, Manifest};
pub use run::{run_command, RunOutput, RunReport};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "TORIC_SPECTRA_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Derivative,
    Critical,
    Hull,
    Flow,
    Check,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Command::Spectrum => "spectrum",
            Command::Derivative => "derivative",
            Command::Critical => "critical",
            Command::Hull => "hull",
            Command::Flow => "flow",
            Command::Check => "check",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },

    #[error("config is not valid JSON: {0}")]
    Parse(String),

    #[error("config key `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("command `{command}` requires a `{block}` block")]
    MissingBlock { block: &'static str, command: Command },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toric-spectra", version, about = "First eigenvalues of toric Kähler metrics")]
pub struct Cli {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; falls back to the config `out` key, then $TORIC_SPECTRA_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (rayon); 1 gives bit-reproducible runs.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Loads, runs and emits; returns the manifest of written files.
pub fn execute(cli: &Cli) -> Result<Manifest, CliError> {
    let start = std::time::Instant::now();
    let cfg = load_config(&cli.config, cli.command)?;
    let dir = output_dir(cli, &cfg);
    let out = match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_command(&cfg, cli.command))?
        }
        None => run_command(&cfg, cli.command)?,
    };
    emit_outputs(&out, &dir, start.elapsed().as_secs_f64())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(m) => {
            for f in &m.files {
                println!("{}", f.name);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
