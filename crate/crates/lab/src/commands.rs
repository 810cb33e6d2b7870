//! The four subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sofic_core::entropy::{EntropyReport, EstimateMode, VariationalProblem, VariationalScan};
use sofic_core::model::sofic_quality;

use crate::config::{ConfigError, Experiment};
use crate::report::{to_json, write_csv, write_file, OracleSummary, ReportFile, RunManifest, Timing, VERSION};
use crate::run::{run_estimate, run_scan};
use crate::verify::{run_suite, CheckOutcome};
use crate::LabError;

#[derive(Debug, Clone, Serialize)]
pub struct QualityRow {
    pub radius: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub size: usize,
    pub points: usize,
    pub volume: f64,
    pub quality: Vec<QualityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub group: String,
    pub models: Vec<ModelRow>,
}

/// Sizes, volumes and sofic quality over the schedule's radii.
pub fn build_model(exp: &Experiment) -> Result<ModelSummary, LabError> {
    let schedule = exp.schedule.as_ref().ok_or(ConfigError {
        line: None,
        message: "build-model needs a [schedule] block with sizes and radii".into(),
    })?;
    let mut models = Vec::new();
    for &size in &schedule.sizes {
        let m = exp.family.build(size)?;
        let quality = schedule
            .radii
            .iter()
            .map(|&r| {
                Ok(QualityRow {
                    radius: r,
                    quality: sofic_quality(&m, &exp.group.ball(r))?,
                })
            })
            .collect::<Result<Vec<_>, sofic_core::model::ModelError>>()?;
        models.push(ModelRow {
            size,
            points: m.len(),
            volume: m.volume(),
            quality,
        });
    }
    Ok(ModelSummary {
        group: format!("{:?}", exp.group),
        models,
    })
}

pub struct EstimateOutput {
    pub report: EntropyReport,
    pub files: Vec<PathBuf>,
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn manifest(exp: &Experiment, command: &str, workers: usize, timings: Vec<Timing>, oracle: OracleSummary, files: &[PathBuf]) -> RunManifest {
    RunManifest {
        config_sha256: exp.hash.clone(),
        version: VERSION.into(),
        command: command.into(),
        workers,
        seed: exp.seed,
        timings,
        oracle,
        files: files
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    }
}

/// Runs an estimate and writes `<name>-<mode>.json`, `.csv` and `.manifest.json`.
pub fn estimate(exp: &Experiment, mode: EstimateMode, workers: usize, out_dir: &Path) -> Result<EstimateOutput, LabError> {
    let problem = exp.problem(mode)?;
    let start = Instant::now();
    let report = run_estimate(&problem, workers)?;
    let elapsed = millis(start);
    let command = format!("estimate --mode {}", mode.name());
    let stem = format!("{}-{}", exp.output_name, mode.name());
    let body = ReportFile {
        config_sha256: &exp.hash,
        version: VERSION,
        command: &command,
        body: &report,
    };
    let json = write_file(out_dir, &format!("{stem}.json"), to_json(&body).as_bytes())?;
    let mut csv_bytes = Vec::new();
    write_csv(&report, &mut csv_bytes)?;
    let csv = write_file(out_dir, &format!("{stem}.csv"), &csv_bytes)?;
    let mut oracle = OracleSummary::default();
    oracle.add(&report);
    let mut files = vec![json, csv];
    let m = manifest(
        exp,
        &command,
        workers,
        vec![Timing {
            operation: "estimate".into(),
            millis: elapsed,
        }],
        oracle,
        &files,
    );
    files.push(write_file(out_dir, &format!("{stem}.manifest.json"), to_json(&m).as_bytes())?);
    Ok(EstimateOutput { report, files })
}

pub struct ScanOutput {
    pub scan: VariationalScan,
    pub files: Vec<PathBuf>,
}

/// Runs the variational scan and writes `<name>-scan.json` and its manifest.
pub fn scan_variational(exp: &Experiment, workers: usize, out_dir: &Path) -> Result<ScanOutput, LabError> {
    let family = exp.scan.ok_or(ConfigError {
        line: None,
        message: "scan-variational needs a [scan] block".into(),
    })?;
    let top = exp.problem(EstimateMode::Top)?;
    let grid = family.grid()?;
    let problem = VariationalProblem::new(exp.system.clone(), grid, exp.family.clone(), top.schedule.clone(), exp.limits)
        .map_err(|e| ConfigError {
            line: None,
            message: e.to_string(),
        })?;
    let start = Instant::now();
    let (scan, reports) = run_scan(&problem, workers)?;
    let elapsed = millis(start);
    let command = "scan-variational";
    let stem = format!("{}-scan", exp.output_name);
    let body = ReportFile {
        config_sha256: &exp.hash,
        version: VERSION,
        command,
        body: &scan,
    };
    let mut files = vec![write_file(out_dir, &format!("{stem}.json"), to_json(&body).as_bytes())?];
    let mut oracle = OracleSummary::default();
    for r in &reports {
        oracle.add(r);
    }
    let m = manifest(
        exp,
        command,
        workers,
        vec![Timing {
            operation: "scan".into(),
            millis: elapsed,
        }],
        oracle,
        &files,
    );
    files.push(write_file(out_dir, &format!("{stem}.manifest.json"), to_json(&m).as_bytes())?);
    Ok(ScanOutput { scan, files })
}

pub fn verify(exp: &Experiment) -> Vec<CheckOutcome> {
    run_suite(exp)
}

/// Fixed-width pass/fail table.
pub fn format_checks(rows: &[CheckOutcome]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{}  {:width$}  {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    out
}
