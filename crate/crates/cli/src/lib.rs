//! Scenario-driven batch runner: load a JSON scenario, run its checks in order, and write a
//! machine report, a text summary and CSV histories.

pub mod report;
pub mod run;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use bakry_emery::Builtin;

pub use report::{CheckReport, RunReport, StatusCounts};
pub use run::{CheckOutcome, Status};
pub use scenario::{load, LoadedScenario, Scenario, ScenarioError, Tolerances};

/// Exit code for a run in which every check passed or was advisory.
pub const EXIT_PASS: i32 = 0;
/// Some check failed or errored.
pub const EXIT_CHECK_FAILURE: i32 = 1;
/// The command line or the scenario file could not be used.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Replaces the scenario's `output` directory.
    pub output: Option<PathBuf>,
    /// Replaces the scenario's seed.
    pub seed: Option<u64>,
    /// Multiplies every default tolerance; scenario overrides are kept as given.
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { output: None, seed: None, tol_scale: 1.0 }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub outcomes: Vec<CheckOutcome>,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("--tol-scale must be positive and finite, got {0}")]
    TolScale(f64),
    #[error("writing results to {dir}: {source}")]
    Output { dir: String, source: std::io::Error },
}

/// One line per builtin model.
pub fn list_builtins() -> String {
    Builtin::CATALOG.iter().map(|(name, about)| format!("{name:<18} {about}\n")).collect()
}

/// Default output directory: `bemc-out/<scenario name>` next to the scenario file.
fn default_output(path: &Path, loaded: &LoadedScenario) -> PathBuf {
    let stem: String =
        loaded.scenario.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    path.parent().unwrap_or(Path::new(".")).join("bemc-out").join(stem)
}

/// Execute a loaded scenario without touching the filesystem.
pub fn execute(loaded: &LoadedScenario, opts: &RunOptions) -> Result<(RunReport, Vec<CheckOutcome>), RunError> {
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(RunError::TolScale(opts.tol_scale));
    }
    let seed = opts.seed.unwrap_or(loaded.scenario.seed);
    let tol = Tolerances::resolve(opts.tol_scale, &loaded.scenario.tolerances);
    let mut runner = run::Runner::new(loaded, tol, seed);
    let outcomes: Vec<CheckOutcome> = (0..loaded.scenario.checks.len()).map(|k| runner.run(k)).collect();
    let counts = StatusCounts::tally(&outcomes);
    let checks = outcomes
        .iter()
        .map(|o| CheckReport {
            name: o.name.clone(),
            check: o.kind,
            status: o.status,
            message: o.message.clone(),
            series: o.series.iter().map(|s| report::series_file(&o.name, s)).collect(),
            payload: o.payload.clone(),
        })
        .collect();
    let report = RunReport {
        engine: "bakry-emery",
        engine_version: env!("CARGO_PKG_VERSION"),
        scenario: loaded.scenario.name.clone(),
        model: loaded.model.name.clone(),
        chart_dimension: loaded.model.dim(),
        synthetic_dimension: loaded.synthetic.to_string(),
        seed,
        tol_scale: opts.tol_scale,
        tolerances: tol,
        checks,
        counts,
        exit_code: counts.exit_code(),
    };
    Ok((report, outcomes))
}

/// Load, run and write the outputs of the scenario at `path`.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let loaded = load(path)?;
    let (report, outcomes) = execute(&loaded, opts)?;
    let output_dir = opts
        .output
        .clone()
        .or_else(|| loaded.scenario.output.clone())
        .unwrap_or_else(|| default_output(path, &loaded));
    let total = start.elapsed().as_secs_f64();
    let files = report::write_outputs(&output_dir, &report, &outcomes, total)
        .map_err(|source| RunError::Output { dir: output_dir.display().to_string(), source })?;
    Ok(RunOutcome { report, outcomes, output_dir, files })
}
