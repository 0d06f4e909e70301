//! Command-line front end: parses flags or a flat config file, runs one
//! experiment and writes a JSON report, CSV companions and a manifest.

pub mod args;
mod commands;
pub mod config;
pub mod report;
mod verify;

use std::io::Write as _;
use std::path::PathBuf;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::Parser;
use kakeya_core::KakeyaError;
use serde_json::{json, Value};
use thiserror::Error;

use args::{Cli, Command};
use report::{report_json, OutputSet};

pub const JOBS_ENV: &str = "KAKEYA_LAB_JOBS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Invalid { flag: String, message: String },

    #[error("{message}")]
    UnknownFlag { flag: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("cannot read `{}`: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{source}")]
    Core { command: &'static str, source: KakeyaError },
}

impl CliError {
    pub fn invalid(flag: &str, message: impl Into<String>) -> Self {
        CliError::Invalid { flag: flag.to_string(), message: message.into() }
    }

    pub(crate) fn core(command: &'static str) -> impl Fn(KakeyaError) -> CliError {
        move |source| CliError::Core { command, source }
    }

    /// The flag a validation failure is attributed to, if any.
    pub fn flag(&self) -> Option<String> {
        match self {
            CliError::Invalid { flag, .. } | CliError::UnknownFlag { flag, .. } => Some(flag.clone()),
            CliError::Read { .. } => Some("--config".into()),
            CliError::Write { .. } => Some("--out".into()),
            CliError::Core { command, source } => core_flag(command, source),
            CliError::Usage(_) => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { .. } if self.flag().is_none() => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Invalid { .. } => "invalid_value",
            CliError::UnknownFlag { .. } => "unknown_flag",
            CliError::Usage(_) => "usage",
            CliError::Read { .. } => "unreadable_config",
            CliError::Write { .. } => "unwritable_path",
            CliError::Core { .. } if self.exit_code() == 2 => "invalid_value",
            CliError::Core { .. } => "computation",
        }
    }

    /// One-line JSON for the diagnostic stream.
    pub fn to_json_line(&self) -> String {
        json!({
            "error": self.kind(),
            "flag": self.flag(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

fn core_flag(command: &str, e: &KakeyaError) -> Option<String> {
    let name = match e {
        KakeyaError::InvalidParameter { name, .. } => *name,
        KakeyaError::GridTooCoarse { .. } => "h",
        KakeyaError::MeshTooCoarse { .. } => "mesh",
        KakeyaError::Dimension { .. } => "n",
        KakeyaError::Parse(_) => "map",
        _ => return None,
    };
    let flag = match (command, name) {
        ("line-kakeya", "r") => "cap",
        ("line-kakeya", "degree" | "sup" | "samples" | "tol") => name,
        ("moll", "epsilon") => "epsilons",
        ("regularity", "scales") => "finest",
        (_, "t_grid" | "profile") => "t-steps",
        (_, "resolution") => "mesh",
        (_, "amp" | "degree" | "sup" | "terms" | "alpha0") => "map",
        (_, "net") => "delta",
        _ => name,
    };
    Some(format!("--{}", flag.replace('_', "-")))
}

/// What a successful invocation produced.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub report: Value,
    pub files: Vec<PathBuf>,
    /// Nonzero when `verify` ran but some check failed.
    pub status: i32,
}

/// Parses `argv` (without the program name), runs the command and writes
/// its outputs. Returns the process exit status.
pub fn run_command(argv: &[String]) -> i32 {
    match run(argv) {
        Ok(outcome) => {
            let line = json!({
                "command": outcome.command,
                "files": outcome.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            });
            println!("{line}");
            outcome.status
        }
        Err(Exit::Clean(text)) => {
            print!("{text}");
            0
        }
        Err(Exit::Failed(e)) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json_line());
            e.exit_code()
        }
    }
}

#[derive(Debug)]
pub enum Exit {
    /// `--help` or `--version`.
    Clean(String),
    Failed(CliError),
}

impl From<CliError> for Exit {
    fn from(e: CliError) -> Self {
        Exit::Failed(e)
    }
}

pub fn run(argv: &[String]) -> Result<Outcome, Exit> {
    let expanded = config::expand_config(argv)?;
    let cli = parse(&expanded)?;
    let jobs = resolve_jobs(cli.command.common().jobs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| execute(&cli.command))?)
}

fn parse(argv: &[String]) -> Result<Cli, Exit> {
    let full = std::iter::once("kakeya-lab".to_string()).chain(argv.iter().cloned());
    Cli::try_parse_from(full).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            Exit::Clean(e.render().to_string())
        }
        _ => {
            let message = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            match e.get(ContextKind::InvalidArg) {
                Some(ContextValue::String(arg)) => {
                    let flag = arg.split([' ', '=']).next().unwrap_or(arg).to_string();
                    if e.kind() == ErrorKind::UnknownArgument {
                        Exit::Failed(CliError::UnknownFlag { flag, message })
                    } else {
                        Exit::Failed(CliError::Invalid { flag, message })
                    }
                }
                _ => Exit::Failed(CliError::Usage(message)),
            }
        }
    })
}

/// `KAKEYA_LAB_JOBS` beats `--jobs`, which beats the available parallelism.
pub fn resolve_jobs(flag: Option<u16>) -> Result<usize, CliError> {
    if let Ok(raw) = std::env::var(JOBS_ENV) {
        return match raw.trim().parse::<usize>() {
            Ok(j) if (1..=1024).contains(&j) => Ok(j),
            _ => Err(CliError::invalid(JOBS_ENV, format!("`{raw}` is not a thread count in 1..=1024"))),
        };
    }
    Ok(match flag {
        Some(j) => j as usize,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    })
}

fn execute(command: &Command) -> Result<Outcome, CliError> {
    let name = command.name();
    let out = command.common().out.clone().unwrap_or_else(|| PathBuf::from(commands::default_out(name)));
    let mut set = OutputSet::for_out(&out)?;
    let (params, result) = match command {
        Command::Sweep(a) => (to_params(a), commands::sweep(a, &mut set)?),
        Command::Slice(a) => (to_params(a), commands::slice(a, &mut set)?),
        Command::Measure(a) => (to_params(a), commands::measure(a)?),
        Command::Tubes(a) => (to_params(a), commands::tubes(a, &mut set)?),
        Command::Moll(a) => (to_params(a), commands::moll(a, &mut set)?),
        Command::Regularity(a) => (to_params(a), commands::regularity(a, &mut set)?),
        Command::LineKakeya(a) => (to_params(a), commands::line_kakeya(a, &mut set)?),
        Command::Verify(a) => (to_params(a), verify::run_suite(a)?),
    };
    let text = report_json(name, &params, &result.results);
    let report: Value = serde_json::from_str(&text).expect("report is valid JSON");
    set.add(result.report_suffix, text);
    let files = set.write()?;
    let status = i32::from(report["results"]["all_passed"] == Value::Bool(false));
    Ok(Outcome { command: name, report, files, status })
}

fn to_params<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

/// Results of one command before they are wrapped in the report envelope.
pub(crate) struct CommandResult {
    pub results: Value,
    /// Suffix of the report file, e.g. `.json` or `.fit.json`.
    pub report_suffix: &'static str,
}
