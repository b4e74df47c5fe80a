//! The machine report, the fixed-width summary, CSV histories and timings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::run::{CheckOutcome, Series, Status};
use crate::scenario::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub check: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// CSV files written for this check, relative to the output directory.
    pub series: Vec<String>,
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub pass: usize,
    pub advisory: usize,
    pub fail: usize,
    pub error: usize,
}

/// Everything in here is a function of the scenario, the seed and the tolerance scale; wall
/// times live in a separate file so that reports compare byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub engine: &'static str,
    pub engine_version: &'static str,
    pub scenario: String,
    pub model: String,
    pub chart_dimension: usize,
    pub synthetic_dimension: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckReport>,
    pub counts: StatusCounts,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
struct CheckTiming<'a> {
    name: &'a str,
    seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Timings<'a> {
    total_seconds: f64,
    checks: Vec<CheckTiming<'a>>,
}

impl StatusCounts {
    pub fn tally(outcomes: &[CheckOutcome]) -> Self {
        let mut c = Self::default();
        for o in outcomes {
            match o.status {
                Status::Pass => c.pass += 1,
                Status::Advisory => c.advisory += 1,
                Status::Fail => c.fail += 1,
                Status::Error => c.error += 1,
            }
        }
        c
    }

    pub fn exit_code(&self) -> i32 {
        if self.fail + self.error > 0 {
            1
        } else {
            0
        }
    }
}

pub fn series_file(check: &str, s: &Series) -> String {
    format!("{check}{}.csv", s.suffix)
}

fn write_csv(path: &Path, s: &Series) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["parameter".to_string()];
    header.extend(s.columns.iter().cloned());
    w.write_record(&header)?;
    for (t, row) in &s.rows {
        let mut record = vec![t.to_string()];
        record.extend(row.iter().map(|x| x.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&record)?;
    }
    w.flush()
}

fn headline(o: &CheckOutcome) -> String {
    const KEYS: [&str; 9] = [
        "min_value",
        "geodesic_residual",
        "jacobi_residual",
        "first_parameter",
        "ricci_residual",
        "slack",
        "weighted_identity_residual",
        "expected_field_error",
        "path_dependence",
    ];
    for key in KEYS {
        if let Some(x) = o.payload.get(key).and_then(Value::as_f64) {
            return format!("{key} = {x:.6e}");
        }
    }
    String::new()
}

pub fn summary_text(report: &RunReport, outcomes: &[CheckOutcome], total: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario   {}", report.scenario);
    let _ = writeln!(out, "model      {} (n = {}, N = {})", report.model, report.chart_dimension, report.synthetic_dimension);
    let _ = writeln!(out, "seed       {}   tol-scale {}", report.seed, report.tol_scale);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<28} {:<22} {:<9} {:>9}  headline", "check", "kind", "status", "seconds");
    for o in outcomes {
        let _ = writeln!(out, "{:<28} {:<22} {:<9} {:>9.3}  {}", o.name, o.kind, o.status.label(), o.seconds, headline(o));
        if let Some(m) = &o.message {
            let _ = writeln!(out, "{:<28} {m}", "");
        }
    }
    let c = report.counts;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "pass {}   advisory {}   fail {}   error {}   total {:.3} s   exit {}",
        c.pass, c.advisory, c.fail, c.error, total, report.exit_code
    );
    out
}

/// Write report.json, summary.txt, timings.json and one CSV per series into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, outcomes: &[CheckOutcome], total: f64) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for o in outcomes {
        for s in &o.series {
            let path = dir.join(series_file(&o.name, s));
            write_csv(&path, s)?;
            written.push(path);
        }
    }
    let mut json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    json.push('\n');
    let path = dir.join("report.json");
    std::fs::write(&path, json)?;
    written.push(path);
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary_text(report, outcomes, total))?;
    written.push(path);
    let timings = Timings {
        total_seconds: total,
        checks: outcomes.iter().map(|o| CheckTiming { name: &o.name, seconds: o.seconds }).collect(),
    };
    let path = dir.join("timings.json");
    std::fs::write(&path, serde_json::to_string_pretty(&timings).map_err(std::io::Error::other)? + "\n")?;
    written.push(path);
    Ok(written)
}
