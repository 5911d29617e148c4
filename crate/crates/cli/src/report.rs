//! Report assembly and CSV formatting.
//!
//! Reports are JSON objects with a fixed field order (version, command,
//! resolved config, results, metadata); only `metadata` holds run-dependent
//! values (the timestamp), so two runs of one config differ in that field
//! alone. CSV cells are never quoted: identifiers contain no commas, and
//! floats print via Rust's shortest round-trip decimal form.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

/// A complete run report.
#[derive(Debug, Serialize)]
pub struct Report {
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub results: Value,
    pub metadata: Metadata,
}

/// Run-dependent bookkeeping; the only part of a report that may differ
/// between identical runs.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub timestamp_unix_s: u64,
}

impl Report {
    pub fn new(command: &'static str, config: Value, results: Value) -> Self {
        let timestamp_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            library_version: mixtop::VERSION,
            command,
            config,
            results,
            metadata: Metadata { timestamp_unix_s },
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports are plain JSON values");
        text.push('\n');
        text
    }
}

/// Shortest round-trip decimal encoding of a float (no quoting, '.' radix).
pub fn fnum(v: f64) -> String {
    format!("{v}")
}

/// One unquoted CSV record.
pub fn csv_row<S: AsRef<str>>(cells: &[S]) -> String {
    let mut line = cells
        .iter()
        .map(|c| c.as_ref())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}
