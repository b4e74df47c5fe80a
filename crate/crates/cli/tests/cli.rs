use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bakry_emery_cli::scenario::parse;
use bakry_emery_cli::{execute, RunOptions, Status, StatusCounts, EXIT_CHECK_FAILURE, EXIT_PASS, EXIT_USAGE};
use proptest::prelude::*;

fn bemc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bemc")).args(args).output().expect("bemc runs")
}

fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_into(file: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", file.to_str().unwrap(), "--output", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bemc(&args)
}

#[test]
fn corpus_covers_every_check_type() {
    let files = corpus();
    assert!(files.len() >= 12, "{} scenarios", files.len());
    let mut kinds = BTreeSet::new();
    for f in &files {
        let loaded = bakry_emery_cli::load(f).unwrap_or_else(|e| panic!("{e}"));
        kinds.extend(loaded.scenario.checks.iter().map(|c| c.kind()));
    }
    let all = [
        "cd_check",
        "geodesic",
        "jacobi",
        "focusing",
        "transform",
        "splitting",
        "laplacian_comparison",
        "index_form",
        "lift",
        "transport",
    ];
    assert_eq!(kinds, all.into_iter().collect());
}

#[test]
fn corpus_reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for f in corpus() {
        let stem = f.file_stem().unwrap().to_str().unwrap();
        let mut reports = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{stem}-{k}"));
            let o = run_into(&f, &out, &["--seed", "17"]);
            assert_eq!(o.status.code(), Some(EXIT_PASS), "{stem}: {}", String::from_utf8_lossy(&o.stdout));
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.file_name().unwrap() != "timings.json" && p.file_name().unwrap() != "summary.txt")
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
                .collect();
            files.sort();
            reports.push(files);
        }
        assert!(reports[0].iter().any(|(n, _)| n == "report.json"));
        assert_eq!(reports[0], reports[1], "{stem}");
    }
}

#[test]
fn report_records_the_seed_and_scaled_tolerances() {
    let tmp = tempfile::tempdir().unwrap();
    let f = corpus().into_iter().find(|p| p.ends_with("minkowski_cd.json")).unwrap();
    let out = tmp.path().join("o");
    let o = run_into(&f, &out, &["--seed", "99", "--tol-scale", "10"]);
    assert_eq!(o.status.code(), Some(EXIT_PASS));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
    assert_eq!(report["tolerances"]["geodesic"], 1e-5);
    assert_eq!(report["checks"][0]["status"], "pass");
    let csv = std::fs::read_to_string(out.join("observer.csv")).unwrap();
    assert!(csv.starts_with("parameter,t,x,y,z,dt,dx,dy,dz,s\n"), "{}", &csv[..60]);
    assert!(std::fs::read_to_string(out.join("summary.txt")).unwrap().contains("pass 4"));
}

const DE_SITTER_TCD: &str = r#"{"name": "de_sitter_tcd", "spacetime": {"model": "de_sitter", "n": 4},
  "checks": [{"check": "cd_check", "condition": "timelike", "points": 10}]}"#;

#[test]
fn failing_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "s.json", DE_SITTER_TCD);
    let o = run_into(&f, &tmp.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(EXIT_CHECK_FAILURE));
    let report = std::fs::read_to_string(tmp.path().join("o/report.json")).unwrap();
    assert!(report.contains("\"status\": \"fail\""));
}

#[test]
fn runtime_error_is_reported_and_later_checks_still_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"name": "err", "spacetime": {"model": "minkowski", "n": 4}, "checks": [
        {"check": "laplacian_comparison", "distance": "2*sqrt((2 - t)^2 - x^2 - y^2 - z^2)", "base": [2, 0, 0, 0], "point": [0, 0, 0, 0]},
        {"check": "cd_check", "condition": "null", "points": 3}]}"#;
    let f = write(tmp.path(), "s.json", text);
    let o = run_into(&f, &tmp.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(EXIT_CHECK_FAILURE));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["status"], "error");
    assert_eq!(report["checks"][1]["status"], "pass");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\"name\": \"x\",\n \"spacetime\": {\"model\": \"minkowski\", \"n\": 4},\n \"checks\": [}");
    let o = run_into(&bad, &tmp.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json:3:"));
    let excluded = write(tmp.path(), "n.json", r#"{"name": "x", "N": 4, "spacetime": {"model": "minkowski", "n": 4}, "checks": []}"#);
    assert_eq!(bemc(&["run", excluded.to_str().unwrap(), "--validate-only"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(bemc(&["run"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(bemc(&[]).status.code(), Some(EXIT_USAGE));
    let ok = write(tmp.path(), "ok.json", DE_SITTER_TCD);
    let o = bemc(&["run", ok.to_str().unwrap(), "--tol-scale", "0", "--output", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn validate_only_does_not_run() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "s.json", DE_SITTER_TCD);
    let o = bemc(&["run", f.to_str().unwrap(), "--validate-only"]);
    assert_eq!(o.status.code(), Some(EXIT_PASS));
    assert!(String::from_utf8_lossy(&o.stdout).contains("valid (1 checks"));
    assert!(!tmp.path().join("bemc-out").exists());
}

#[test]
fn lists_builtins() {
    let o = bemc(&["--list-builtins"]);
    assert_eq!(o.status.code(), Some(EXIT_PASS));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["minkowski_with_f", "de_sitter", "anti_de_sitter", "einstein_static", "warped_product", "twisted_product"] {
        assert!(text.contains(name), "{name}");
    }
}

fn status_strategy() -> impl Strategy<Value = Status> {
    prop_oneof![Just(Status::Pass), Just(Status::Advisory), Just(Status::Fail), Just(Status::Error)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// TCD(λ, ∞) on de Sitter has minimum -3: the run passes exactly when λ ≤ -3.
    #[test]
    fn exit_code_tracks_the_cd_verdict(lambda in -6.0f64..3.0) {
        prop_assume!((lambda + 3.0).abs() > 1e-6);
        let text = format!(
            r#"{{"name": "p", "spacetime": {{"model": "de_sitter", "n": 4}}, "checks": [{{"check": "cd_check", "condition": "timelike", "lambda": {lambda}, "points": 4, "directions": 4}}]}}"#
        );
        let loaded = parse("p.json", &text).unwrap();
        let (report, outcomes) = execute(&loaded, &RunOptions::default()).unwrap();
        let expected = if lambda < -3.0 { EXIT_PASS } else { EXIT_CHECK_FAILURE };
        prop_assert_eq!(report.exit_code, expected);
        prop_assert_eq!(outcomes[0].status, if lambda < -3.0 { Status::Pass } else { Status::Fail });
    }

    #[test]
    fn exit_code_is_one_iff_a_check_failed_or_errored(statuses in proptest::collection::vec(status_strategy(), 0..12)) {
        let outcomes: Vec<_> = statuses
            .iter()
            .map(|s| bakry_emery_cli::CheckOutcome {
                name: String::new(),
                kind: "cd_check",
                status: *s,
                message: None,
                payload: serde_json::Value::Null,
                series: Vec::new(),
                seconds: 0.0,
            })
            .collect();
        let bad = statuses.iter().any(|s| matches!(s, Status::Fail | Status::Error));
        prop_assert_eq!(StatusCounts::tally(&outcomes).exit_code(), if bad { EXIT_CHECK_FAILURE } else { EXIT_PASS });
    }
}
