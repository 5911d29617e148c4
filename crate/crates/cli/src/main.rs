//! Batch driver: loads a JSON run configuration, dispatches the computation,
//! and writes a JSON report (plus a CSV data file for tabular commands).
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical admissibility
//! failure, 1 internal error.

// Validation guards use the negated comparison form on purpose: `!(x > 0.0)`
// is true for NaN, so NaN inputs fail validation instead of slipping through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

/// Computes geometric phases, lattice invariants, and open-system
/// trajectories from JSON run configurations.
#[derive(Parser)]
#[command(name = "mixtop", version = mixtop::VERSION)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report output path; overrides the config key "out".
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for grid sweeps (default: all available cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the command's primary tolerance; overrides the config key "tol".
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomized fixtures; overrides the config key "seed".
    #[arg(long)]
    seed: Option<u64>,
}

enum CliError {
    Lib(mixtop::Error),
    Internal(String),
}

impl From<mixtop::Error> for CliError {
    fn from(e: mixtop::Error) -> Self {
        CliError::Lib(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Internal(msg) => write!(f, "internal: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_input_error() => 2,
            CliError::Lib(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Lib(mixtop::Error::Validation(
                "--threads must be at least 1".into(),
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        CliError::Lib(mixtop::Error::Validation(format!(
            "cannot read config {}: {e}",
            cli.config.display()
        )))
    })?;
    let flags = config::Flags {
        out: cli.out.clone(),
        tol: cli.tol,
        seed: cli.seed,
    };
    let cfg = config::parse(&text, &flags)?;
    let outcome = commands::run(&cfg)?;

    let out_path = Path::new(cfg.out()).to_path_buf();
    let csv_path = out_path.with_extension("csv");
    let mut results = outcome.results;
    if outcome.csv.is_some() {
        let name = csv_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        results["csv_file"] = serde_json::Value::String(name);
    }
    let report = report::Report::new(cfg.command(), cfg.resolved_json(), results);

    let mut messages = Vec::new();
    std::fs::write(&out_path, report.to_json())
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out_path.display())))?;
    messages.push(format!("report written to {}", out_path.display()));
    if let Some(body) = outcome.csv {
        std::fs::write(&csv_path, body)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", csv_path.display())))?;
        messages.push(format!("data written to {}", csv_path.display()));
    }
    Ok(messages)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(messages) => {
            for message in messages {
                println!("{message}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
