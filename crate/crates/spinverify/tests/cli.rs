//! Exit-code and output contract of the command-line interface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinverify"))
}

fn write_scenario(name: &str, contents: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("spinverify-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn run_passes_on_flat_scenario() {
    let path = write_scenario(
        "flat_ok.json",
        r#"{"fixture": {"name": "flat_parallel", "n": 2},
            "grid": {"counts": [5]}, "levels": 2,
            "checks": ["killing_residual", "classify"]}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"schema_version\": 1"));
    assert!(stdout.contains("\"pass\": true"));
    assert!(stdout.contains("parallel"));
}

#[test]
fn reports_are_identical_across_runs() {
    let path = write_scenario(
        "flat_repeat.json",
        r#"{"fixture": {"name": "flat_parallel", "n": 2},
            "grid": {"counts": [4]}, "levels": 2, "seed": 9,
            "checks": ["killing_residual", "sl"]}"#,
    );
    let a = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    let b = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "reports must be byte-stable");
}

#[test]
fn malformed_scenario_exits_2() {
    // Missing fixture name.
    let path = write_scenario(
        "missing_name.json",
        r#"{"fixture": {"n": 2}, "checks": ["killing_residual"]}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("name"), "diagnostic must name the missing field: {stderr}");

    // Invalid JSON.
    let path = write_scenario("broken.json", "{not json");
    let out = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Nonexistent file.
    let out = bin().args(["run", "--scenario", "/nonexistent/nowhere.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_fixture_parameters_exit_2() {
    let path = write_scenario(
        "bad_fixture.json",
        r#"{"fixture": {"name": "flat_parallel", "n": 1},
            "checks": ["killing_residual"]}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refine_requires_levels() {
    let path = write_scenario(
        "refine.json",
        r#"{"fixture": {"name": "flat_parallel", "n": 2},
            "grid": {"counts": [4]}, "checks": ["sl"]}"#,
    );
    let out = bin().args(["refine", "--scenario"]).arg(&path).args(["--levels", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["refine", "--scenario"]).arg(&path).args(["--levels", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("\"levels\": 3"));
}

#[test]
fn list_and_describe() {
    let out = bin().arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("dim2_type2"));
    assert!(stdout.contains("pform_recurrence"));

    let out = bin().args(["describe", "pform_recurrence"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("d omega_p = (K(-1)^p - conj K) omega_{p+1}"));

    let out = bin().args(["describe", "no_such_check"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("killing_residual"), "must list valid names: {stderr}");
}

#[test]
fn failing_check_exits_1() {
    // Demand an impossibly tight tolerance so a residual check fails.
    let path = write_scenario(
        "too_tight.json",
        r#"{"fixture": {"name": "dim2_type2"},
            "grid": {"counts": [3], "ranges": [[-1,1],[-1,1]]},
            "levels": 2, "tolerance": 1e-30,
            "checks": ["conf_kill"]}"#,
    );
    let out = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    // conf_kill is order-judged; use associated_data which is tolerance-judged.
    let path = write_scenario(
        "too_tight2.json",
        r#"{"fixture": {"name": "type1_warped"},
            "grid": {"counts": [3], "ranges": [[-1,1],[-1,1],[-1,1]]},
            "levels": 2, "tolerance": 1e-30,
            "checks": ["killing_residual"]}"#,
    );
    let out2 = bin().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out2.status.code(), Some(1), "stdout: {}", String::from_utf8_lossy(&out2.stdout));
    drop(out);
}

#[test]
fn output_flag_writes_report() {
    let path = write_scenario(
        "with_output.json",
        r#"{"fixture": {"name": "flat_parallel", "n": 2},
            "grid": {"counts": [4]}, "levels": 2,
            "checks": ["killing_residual"]}"#,
    );
    let report_path = std::env::temp_dir().join("spinverify-cli-tests").join("report.json");
    let out = bin()
        .args(["run", "--scenario"])
        .arg(&path)
        .arg("--output")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
}
