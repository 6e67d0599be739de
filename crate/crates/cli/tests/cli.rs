use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn revud(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revud")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn result_f64(v: &Value, row: usize, key: &str) -> f64 {
    v["results"][row][key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

#[test]
fn state_game_reproduces_helstrom_value() {
    let pair = data("pair.json");
    let v = json(&revud(&["state-game", "--input", pair.to_str().unwrap()]));
    let p = result_f64(&v, 0, "success_probability");
    assert!((p - 0.5 * (1.0 + 0.5f64.sqrt())).abs() < 1e-6, "{p}");
    assert_eq!(v["results"][0]["consistent"], Value::Bool(true));
}

#[test]
fn eta_sweep_gives_one_csv_row_per_value() {
    let pair = data("pair.json");
    let out = revud(&["state-game", "--input", pair.to_str().unwrap(), "--eta", "0,0.3,0.7", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let eta_col = headers.iter().position(|h| h == "eta").unwrap();
    let p_col = headers.iter().position(|h| h == "success_probability").unwrap();
    let recs: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 3);
    let p0: f64 = recs[0][p_col].parse().unwrap();
    for r in &recs {
        let eta: f64 = r[eta_col].parse().unwrap();
        let p: f64 = r[p_col].parse().unwrap();
        assert!((p - (1.0 - eta) * p0).abs() < 1e-6);
    }
}

#[test]
fn qre_of_plus_zero_pair() {
    let pair = data("pair.json");
    let v = json(&revud(&["qre", "--input", pair.to_str().unwrap()]));
    assert!((result_f64(&v, 0, "value") - (1.0 + 0.5f64.sqrt())).abs() < 1e-6);
    assert!((result_f64(&v, 0, "value") - result_f64(&v, 0, "dual_value")).abs() < 1e-7);
}

#[test]
fn geometric_divergence_of_diagonal_pair_is_ln2() {
    let f = data("diagpair.json");
    for kind in ["geometric", "sandwiched", "umegaki", "bs"] {
        let v = json(&revud(&["divergence", "--kind", kind, "--alpha", "2", "--input", f.to_str().unwrap()]));
        assert!((result_f64(&v, 0, "value") - 2f64.ln()).abs() < 1e-8, "{kind}: {v}");
    }
}

#[test]
fn channel_divergence_of_depolarizing_pair() {
    let f = data("depolarizing.json");
    let v = json(&revud(&["channel-divergence", "--input", f.to_str().unwrap()]));
    let rows = v["results"].as_array().unwrap();
    assert!(rows.iter().any(|r| (r["value"].as_f64().unwrap_or(f64::NAN) - 0.1956).abs() < 1e-3), "{v}");
}

#[test]
fn simulate_respects_the_bound() {
    let f = data("flip.json");
    let v = json(&revud(&["simulate", "--input", f.to_str().unwrap(), "--protocols", "10", "--seed", "5"]));
    for r in v["results"].as_array().unwrap() {
        assert_eq!(r["violations"], Value::from(0));
    }
}

#[test]
fn validate_passes_on_sample_files() {
    for name in ["pair.json", "diagpair.json", "depolarizing.json", "flip.json"] {
        let f = data(name);
        let out = revud(&["validate", "--input", f.to_str().unwrap(), "--protocols", "4"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        let checks = v["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c["passed"] == Value::Bool(true)));
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let f = data("flip.json");
    let args = ["simulate", "--input", f.to_str().unwrap(), "--protocols", "8", "--seed", "11"];
    let a = revud(&args);
    let b = revud(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_flag_writes_the_same_report() {
    let f = data("pair.json");
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let to_file = revud(&["qre", "--input", f.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert!(to_file.status.success());
    let stdout = revud(&["qre", "--input", f.to_str().unwrap()]);
    assert_eq!(std::fs::read(&target).unwrap(), stdout.stdout);
}

#[test]
fn malformed_inputs_exit_with_code_two() {
    let cases = [
        ("not json", ""),
        (
            r#"{"schema_version": "1", "kind": "states", "matrices": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]], "extra": 1}"#,
            "extra",
        ),
        (r#"{"schema_version": "9", "kind": "states", "matrices": [[[[1, 0]]]]}"#, "schema_version"),
        (
            r#"{"schema_version": "1", "kind": "states", "matrices": [[[[1, 0], [0, 0]], [[0, 0], [0]]]]}"#,
            "matrices[0][1][1]",
        ),
        (
            r#"{"schema_version": "1", "kind": "states", "matrices": [[[[0.5, 0], [0.5, 0]], [[0, 0], [0.5, 0]]]]}"#,
            "matrices[0]",
        ),
        (
            r#"{"schema_version": "1", "kind": "states", "matrices": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]], "priors": [0.3]}"#,
            "priors",
        ),
    ];
    for (text, needle) in cases {
        let f = write_temp(text);
        let out = revud(&["state-game", "--input", f.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{text}: {err}");
    }
}

#[test]
fn bad_flags_and_missing_files_exit_with_code_two() {
    let f = data("pair.json");
    assert_eq!(revud(&["state-game", "--input", f.to_str().unwrap(), "--eta", "1.5"]).status.code(), Some(2));
    assert_eq!(revud(&["state-game", "--input", "/nonexistent/problem.json"]).status.code(), Some(2));
    assert_eq!(revud(&["state-game"]).status.code(), Some(2));
    assert_eq!(revud(&["no-such-command"]).status.code(), Some(2));
}
