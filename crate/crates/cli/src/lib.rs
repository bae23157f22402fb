//! Command-line front-end for nesslab experiments.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nesslab_core::ErrorKind;
use serde::Serialize;

use config::{ConfigError, ExperimentConfig};
use output::Artifacts;
use pipeline::{Run, RunError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nesslab", version, about = "Current-carrying stationary states on finite chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel scans.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    pub log_level: LogLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Model operators, velocities and conservation residuals.
    Build,
    /// Lieb-Robinson scan.
    VerifyLr,
    /// Biased Gibbs state and its NESS report.
    Ness,
    /// Correlation curve, flatness bound and sum rule.
    Sumrule,
    /// Spectral weights, momentum-derivative check and singularity profile.
    Spectral,
    /// Every stage in sequence.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
    exit_code: i32,
}

#[derive(Debug, Serialize)]
struct ErrorJson {
    error: ErrorBody,
}

#[derive(Debug, Serialize)]
struct ChecksJson<'a> {
    failed_checks: &'a [String],
    exit_code: i32,
}

fn error_json(kind: &'static str, message: String, exit_code: i32) -> ErrorJson {
    ErrorJson { error: ErrorBody { kind, message, exit_code } }
}

fn core_error(e: &nesslab_core::Error) -> (&'static str, i32) {
    match e.kind() {
        ErrorKind::Config => ("config", EXIT_CONFIG),
        ErrorKind::Precondition => ("precondition", EXIT_PRECONDITION),
        ErrorKind::Numerical => ("numerical", EXIT_CHECK_FAILED),
    }
}

/// Runs the CLI and returns the process exit code. Errors are reported as
/// JSON on stderr and, when the output directory exists, in `error.json`.
pub fn run(cli: Cli) -> i32 {
    let _ = env_logger::Builder::new().filter_level(cli.log_level.filter()).format_timestamp(None).try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let Some(path) = cli.config.as_ref() else {
        return report(None, error_json("config", "--config is required".into(), EXIT_CONFIG));
    };
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return report(None, config_error(&e)),
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let validated = match cfg.validate() {
        Ok(v) => v,
        Err(e) => return report(None, config_error(&e)),
    };
    let out = match Artifacts::create(&out_dir) {
        Ok(a) => a,
        Err(e) => return report(None, error_json("io", e.to_string(), EXIT_CONFIG)),
    };
    let mut run = Run::new(&cfg, validated, out.clone());
    let result = match cli.command {
        Command::Build => run.build(),
        Command::VerifyLr => run.verify_lr(),
        Command::Ness => run.ness(),
        Command::Sumrule => run.sumrule(),
        Command::Spectral => run.spectral(),
        Command::All => run.all(),
    };
    match result {
        Err(RunError::Core(e)) => {
            let (kind, code) = core_error(&e);
            report(Some(&out), error_json(kind, e.to_string(), code))
        }
        Err(RunError::Io(e)) => report(Some(&out), error_json("io", e.to_string(), EXIT_CHECK_FAILED)),
        Ok(()) if run.failed.is_empty() => EXIT_OK,
        Ok(()) => {
            let body = ChecksJson { failed_checks: &run.failed, exit_code: EXIT_CHECK_FAILED };
            eprintln!("{}", serde_json::to_string(&body).expect("serialisable"));
            let _ = out.json("failed_checks.json", &body);
            EXIT_CHECK_FAILED
        }
    }
}

fn config_error(e: &ConfigError) -> ErrorJson {
    match e {
        ConfigError::Invalid(m) => error_json("config", m.clone(), EXIT_CONFIG),
        ConfigError::Geometry(g) => {
            let (kind, code) = core_error(g);
            error_json(kind, g.to_string(), code)
        }
    }
}

fn report(out: Option<&Artifacts>, err: ErrorJson) -> i32 {
    eprintln!("{}", serde_json::to_string(&err).expect("serialisable"));
    if let Some(a) = out {
        let _ = a.json("error.json", &err);
    }
    err.error.exit_code
}
