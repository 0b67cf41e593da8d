use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exciton-fcs"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_single_line_error(out: &Output, kind: &str) {
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    let v: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], kind, "{err}");
}

#[test]
fn trimer_pair_scan_writes_one_csv_per_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "theta-scan",
        "--preset",
        "fmo3",
        "--temps",
        "77,150,300",
        "--channel",
        "pair:a1<->a2",
        "--out",
        out,
    ]);
    for t in [77, 150, 300] {
        let path = dir.path().join(format!("theta_scan_T{t}_pair_a1-a2.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("s,theta_cm1,activity_cm1,activity_ps1,mandel\n"));
        assert!(!text.contains("NaN") && !text.contains("inf"));
        let rows = data_rows(&path);
        assert_eq!(rows.len(), 281);
        let zero = rows.iter().find(|r| r[0] == 0.0).unwrap();
        assert!(zero[1].abs() < 1e-10);
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
}

#[test]
fn dimer_mandel_column_is_negative() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "theta-scan",
        "--preset",
        "fmo2",
        "--channel",
        "down:a2->a1",
        "--out",
        out,
    ]);
    for t in [77, 150, 300] {
        let rows = data_rows(&dir.path().join(format!("theta_scan_T{t}_down_a2-a1.csv")));
        assert_eq!(rows.len(), 281);
        assert!(rows.iter().all(|r| r[4] < 0.0));
    }
}

#[test]
fn crossover_map_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    ok(&[
        "crossover-map",
        "--preset",
        "fmo3",
        "--temps",
        "150,300",
        "--channel",
        "down:a3->a2",
        "--out",
        out,
    ]);
    let map = read_json(&dir.path().join("crossover_map.json"));
    let reports = map["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["s_star"].is_f64(), "{r}");
        assert!(r["counted_channels"][0]["intensity"].as_f64().unwrap() > 0.0);
    }

    ok(&["crossover-map", "--preset", "fmo2", "--out", out]);
    let map = read_json(&dir.path().join("crossover_map.json"));
    assert!(map["reports"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["s_star"].is_null()));

    ok(&[
        "crossover-map",
        "--preset",
        "fmo4",
        "--temps",
        "77,300",
        "--channel",
        "down:a4->a2",
        "--out",
        out,
    ]);
    let map = read_json(&dir.path().join("crossover_map.json"));
    let q: Vec<f64> = map["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["q_at_zero"].as_f64().unwrap())
        .collect();
    assert!(q[0] > 0.0 && q[1] < 0.0, "{q:?}");
}

#[test]
fn crossover_map_needs_two_temperatures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "crossover-map",
        "--temps",
        "300",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_single_line_error(&out, "config");
}

#[test]
fn dimer_oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "oracle-check",
        "--preset",
        "fmo2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass=true"));
    let report = read_json(&dir.path().join("oracle_check.json"));
    assert_eq!(report["pass"], true);
    for r in report["reports"].as_array().unwrap() {
        let hist = r["trajectory"]["histogram"].as_object().unwrap();
        let total: u64 = hist.values().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 10_000);
        assert!(r["z_mean"].as_f64().unwrap().abs() < 3.0);
    }
}

#[test]
fn uncoupled_model_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("flat.json");
    fs::write(
        &model,
        r#"{"energies": [0, 100], "couplings": [[0, 0], [0, 0]], "bath": {"temperature_K": 300}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    ok(&[
        "oracle-check",
        "--model",
        model.to_str().unwrap(),
        "--traj",
        "50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let report = read_json(&out_dir.join("oracle_check.json"));
    let r = &report["reports"][0];
    assert_eq!(r["temperature_K"], 300.0);
    assert_eq!(r["spectral"]["mean_rate"], 0.0);
    assert_eq!(r["trajectory"]["mean_rate"], 0.0);
    assert_eq!(r["pass"], true);
}

#[test]
fn mismatched_channel_sets_fail_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let out = run(&[
        "oracle-check",
        "--preset",
        "fmo3",
        "--channel",
        "down:a3->a2",
        "--trajectory-channel",
        "down:a2->a1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_single_line_error(&out, "config");
    assert!(!out_dir.exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        ok(&[
            "theta-scan",
            "--preset",
            "fmo4",
            "--temps",
            "77,300",
            "--format",
            "csv,json,svg",
            "--out",
            out,
        ]);
        ok(&[
            "oracle-check",
            "--preset",
            "fmo2",
            "--temps",
            "150",
            "--traj",
            "500",
            "--seed",
            "42",
            "--threads",
            "3",
            "--out",
            out,
        ]);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn thread_count_does_not_change_trajectory_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        ok(&[
            "oracle-check",
            "--preset",
            "fmo3",
            "--temps",
            "300",
            "--traj",
            "300",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
    }
    assert_eq!(
        fs::read(a.path().join("oracle_check.json")).unwrap(),
        fs::read(b.path().join("oracle_check.json")).unwrap()
    );
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"preset": "fmo3", "temperatures": [150], "channels": ["down:a2->a1"],
            "s_grid": {"min": -1, "max": 1, "points": 21}, "out": "from-file"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("flags");
    ok(&[
        "theta-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--s-points",
        "11",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let rows = data_rows(&out_dir.join("theta_scan_T150_down_a2-a1.csv"));
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], -1.0);
}

#[test]
fn bad_inputs_give_one_line_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_single_line_error(
        &run(&["theta-scan", "--preset", "fmo9", "--out", out]),
        "model",
    );
    assert_single_line_error(
        &run(&["theta-scan", "--preset", "fmo2", "--model", "x.json"]),
        "usage",
    );
    assert_single_line_error(
        &run(&["theta-scan", "--channel", "sideways", "--out", out]),
        "config",
    );
    assert_single_line_error(
        &run(&["theta-scan", "--format", "png", "--out", out]),
        "config",
    );
    assert_single_line_error(
        &run(&["theta-scan", "--s-points", "1", "--out", out]),
        "config",
    );
    assert_single_line_error(
        &run(&["theta-scan", "--model", "/does/not/exist.json"]),
        "input",
    );
    assert_single_line_error(
        &run(&["oracle-check", "--format", "csv", "--out", out]),
        "config",
    );
    let bad_model = dir.path().join("bad.json");
    fs::write(
        &bad_model,
        r#"{"energies": [0, 1], "couplings": [[0, 1], [2, 0]]}"#,
    )
    .unwrap();
    assert_single_line_error(
        &run(&[
            "theta-scan",
            "--model",
            bad_model.to_str().unwrap(),
            "--out",
            out,
        ]),
        "model",
    );
}

#[test]
fn rate_function_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "rate-function",
        "--preset",
        "fmo2",
        "--temps",
        "300",
        "--s-min",
        "-1",
        "--s-max",
        "3",
        "--s-points",
        "81",
        "--empirical",
        "--traj",
        "2000",
        "--format",
        "csv,json,svg",
        "--out",
        out,
    ]);
    let rows = data_rows(&dir.path().join("rate_function_T300_all-down.csv"));
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().all(|r| r[3] >= 0.0));
    let min = rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min);
    assert!(min < 1e-12);
    let emp = data_rows(&dir.path().join("rate_function_T300_all-down_empirical.csv"));
    assert!(!emp.is_empty());
    assert!(dir.path().join("rate_function_T300_all-down.svg").exists());
    let doc = read_json(&dir.path().join("rate_function_T300_all-down.json"));
    assert_eq!(doc["convex"], true);
}

#[test]
fn presets_listing() {
    let out = ok(&["presets", "--json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["fmo2", "fmo3", "fmo4"]);
    assert_eq!(v[1]["dominant_site"], serde_json::json!([3, 1, 2]));
    let text = String::from_utf8(ok(&["presets"]).stdout).unwrap();
    assert!(text.contains("fmo4 (4 sites)"));
}
