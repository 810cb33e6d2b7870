//! Report files: JSON, CSV and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sofic_core::entropy::{CellValue, EntropyReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What goes into the report file: the deterministic part of a run.
#[derive(Debug, Serialize)]
pub struct ReportFile<'a, T: Serialize> {
    pub config_sha256: &'a str,
    pub version: &'a str,
    pub command: &'a str,
    pub body: &'a T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub operation: String,
    pub millis: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleSummary {
    pub checks: usize,
    pub failures: usize,
}

impl OracleSummary {
    pub fn add(&mut self, r: &EntropyReport) {
        self.checks += r.diagnostics.oracle_checks;
        self.failures += r.diagnostics.oracle_failures;
    }
}

/// Per-run metadata that may differ between runs (timings, worker count).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub version: String,
    pub command: String,
    pub workers: usize,
    pub seed: u64,
    pub timings: Vec<Timing>,
    pub oracle: OracleSummary,
    pub files: Vec<String>,
}

pub const CSV_HEADER: [&str; 8] = ["n", "U_radius", "delta", "epsilon", "eta", "engine", "log_count_density", "empty"];

/// One row per cell.
pub fn write_csv<W: Write>(report: &EntropyReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &report.cells {
        let (value, empty) = match c.value {
            CellValue::Finite { value } => (value.to_string(), "false"),
            CellValue::Empty => (String::new(), "true"),
        };
        w.write_record([
            c.n.to_string(),
            c.radius.to_string(),
            c.delta.to_string(),
            c.epsilon.to_string(),
            c.eta.map(|e| e.to_string()).unwrap_or_default(),
            c.engine.name().to_string(),
            value,
            empty.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(path)
}
