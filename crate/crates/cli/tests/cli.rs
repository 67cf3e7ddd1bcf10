use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use rp_lab_cli::config::parse;

const BIN: &str = env!("CARGO_BIN_EXE_rp-lab");

fn write(dir: &TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn rp_lab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RP_LAB_THREADS", "2").output().unwrap()
}

fn run_json(config: &Path) -> (i32, Value) {
    let out = rp_lab(&["run", config.to_str().unwrap()]);
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report)
}

const SCALAR: &str = r#"{"experiment": "scalar-rp", "lattice": {"extent": [16, 16], "spacing": 0.25}, "mass": 1.0}"#;

#[test]
fn clifford_check_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiment": "clifford-check", "dimensions": [4], "seed": 1}"#);
    let (code, report) = run_json(&cfg);
    assert_eq!(code, 0);
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"clifford relations d=4"));
}

#[test]
fn flat_scalar_gram_is_positive() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", SCALAR);
    let (code, report) = run_json(&cfg);
    assert_eq!(code, 0, "{report}");
    let spectrum: Vec<f64> = report["spectra"]["gram"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(spectrum.len(), 7 * 16);
    assert!(spectrum.windows(2).all(|w| w[0] <= w[1]));
    assert!(spectrum[0] >= -1e-8);
}

#[test]
fn negative_mass_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "m.json", &SCALAR.replace("1.0}", "-1.0}"));
    let out = rp_lab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mass"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "u.json", r#"{"experiment": "contour-check", "omega": [1]}"#);
    let out = rp_lab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));
}

#[test]
fn missing_file_is_a_config_error() {
    let out = rp_lab(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiment": "contour-check"}"#);
    let out = Command::new(BIN).args(["run", cfg.to_str().unwrap()]).env("RP_LAB_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_accepts_good_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.json", SCALAR);
    let out = rp_lab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("scalar-rp"));
}

#[test]
fn csv_has_one_row_per_check() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiment": "contour-check", "times": [0.5], "omegas": [1, 3]}"#);
    let csv_path = dir.path().join("out.csv");
    let out = rp_lab(&["run", cfg.to_str().unwrap(), "--format", "csv", "--output", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,value,tolerance,comparison,pass"));
    assert_eq!(lines.filter(|l| l.ends_with(",true")).count(), 2);
}

#[test]
fn output_key_in_config_is_honoured() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("report.json");
    let body = format!(r#"{{"experiment": "contour-check", "output": {:?}}}"#, target.to_str().unwrap());
    let cfg = write(&dir, "c.json", &body);
    let out = rp_lab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(report["experiment"], "contour-check");
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"experiment": "contour-check"}"#);
    let out = rp_lab(&["run", cfg.to_str().unwrap(), "--output", "/nonexistent/dir/r.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let dir = TempDir::new().unwrap();
    // Too short a time box: the boundary gap does not shrink under refinement.
    let cfg = write(
        &dir,
        "d.json",
        r#"{"experiment": "dirac-rp", "lattice": {"extent": [16, 8], "spacing": 0.25},
            "basis": {"times": [1], "spatial": [0]}, "spacings": [0.25, 0.125]}"#,
    );
    let (code, report) = run_json(&cfg);
    assert_eq!(code, 1);
    assert_eq!(report["passed"], false);
}

#[test]
fn solver_breakdown_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.json",
        r#"{"experiment": "scalar-rp", "lattice": {"extent": [16, 16], "spacing": 0.25},
            "solver": {"tolerance": 1e-14, "max_iter": 2}}"#,
    );
    let (code, report) = run_json(&cfg);
    assert_eq!(code, 3);
    assert_eq!(report["passed"], false);
}

#[test]
fn config_echo_revalidates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "q.json", r#"{"experiment": "quantize", "lattice": {"extent": [12, 6], "spacing": 0.5},
        "basis": {"times": [1, 2], "spatial": [0, 3]}, "seed": 11}"#);
    let (code, report) = run_json(&cfg);
    assert_eq!(code, 0, "{report}");
    let echo = parse(&report["config"].to_string()).unwrap();
    echo.validate().unwrap();
    assert_eq!(echo.seed, 11);
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "d.json", r#"{"experiment": "dirac-rp", "lattice": {"extent": [16, 4], "spacing": 0.5},
        "basis": {"times": [1, 2]}, "seed": 5}"#);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    let (a_code, a) = run_json(&cfg);
    let b = Command::new(BIN).args(["run", cfg.to_str().unwrap()]).env("RP_LAB_THREADS", "3").output().unwrap();
    let b: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(a_code, 0, "{a}");
    assert_eq!(strip(a), strip(b));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = rp_lab(&["validate", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
        count += 1;
    }
    assert!(count >= 7);
}
