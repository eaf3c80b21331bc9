use std::path::PathBuf;
use std::process::{Command, Output};

fn twedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twedge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `name value` lines of text output.
fn field(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next() == Some(name)).then(|| parts.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{name}` in\n{text}"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn solve_toeplitz_matches_reference_centering() {
    let out = twedge(&["solve", "--toeplitz", "1,0.2,0.3", "--p", "50", "--n", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!((field(&text, "mu") - 3.7297).abs() <= 1e-4, "{text}");
    assert!((field(&text, "sigma") - 3.9271).abs() <= 1e-4, "{text}");
    assert_eq!(field(&text, "c"), 0.399615);
}

#[test]
fn solve_identity_closed_forms() {
    let text = stdout(&twedge(&["solve", "--id", "--p", "100", "--n", "100"]));
    assert!(text.contains("c       0.500000"));
    assert!(text.contains("mu      4.00000"));
    assert!(text.contains("sigma   2.51984"));
}

#[test]
fn solve_atoms() {
    let text = stdout(&twedge(&[
        "solve",
        "--atoms",
        "10:0.3,1:0.7",
        "--p",
        "100",
        "--n",
        "400",
    ]));
    assert!((field(&text, "mu") - 16.417).abs() <= 1e-3);
    assert!((field(&text, "sigma") - 21.257).abs() <= 1e-3);
}

#[test]
fn solve_from_model_file_with_dimension_override() {
    let dir = scratch("model_file");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.model");
    std::fs::write(&path, "# banded\nkind = toeplitz\ncoefficients = 1, 0.2, 0.3\np = 10\n").unwrap();
    let out = twedge(&["solve", "--model", path.to_str().unwrap(), "--p", "50", "--n", "400"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!((field(&text, "mu") - 2.6559).abs() <= 1e-4);
    assert!((field(&text, "sigma") - 4.4288).abs() <= 1e-4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = scratch("bad_model");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.model");
    std::fs::write(&path, "kind = toeplitz\ncoefficients = 1, x\np = 10\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve", "--model", path.to_str().unwrap(), "--n", "10"],
        vec!["solve", "--atoms", "10:0.3", "--p", "100", "--n", "100"],
        vec!["solve", "--atoms", "10-0.3", "--p", "100", "--n", "100"],
        vec!["solve", "--id", "--n", "100"],
        vec!["solve", "--id", "--toeplitz", "1,0.2", "--p", "5", "--n", "100"],
        vec!["solve", "--p", "5", "--n", "10"],
        vec!["solve", "--id", "--p", "5"],
        vec!["solve", "--toeplitz", "1,0.9,0.9", "--p", "20", "--n", "40"],
        vec!["tw", "--quantile", "1.5"],
        vec!["tw", "--cdf", "0", "--table"],
        vec!["spike", "--id", "--p", "10", "--n", "20", "--spikes", "0.5"],
        vec!["nonsense"],
    ];
    for args in cases {
        let out = twedge(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let stderr = String::from_utf8(twedge(&["solve", "--model", path.to_str().unwrap(), "--n", "10"]).stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn tw_values() {
    let f: f64 = stdout(&twedge(&["tw", "--cdf", "-1.81"])).trim().parse().unwrap();
    assert!((f - 0.50).abs() <= 0.02);
    let q: f64 = stdout(&twedge(&["tw", "--quantile", "0.01"])).trim().parse().unwrap();
    assert!((q + 3.73).abs() <= 0.05);
    assert_eq!(stdout(&twedge(&["tw", "--cdf", "8"])).trim(), "1.000000");
}

#[test]
fn tw_table_has_nine_rows() {
    let text = stdout(&twedge(&["tw", "--table"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,target,F0");
    assert_eq!(lines.len(), 10);
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[1] - cols[2]).abs() <= 0.02, "{line}");
    }
}

#[test]
fn spike_regimes() {
    let out = twedge(&[
        "spike",
        "--base-id",
        "--p",
        "50",
        "--n",
        "100",
        "--spikes",
        "1.2,1.70711,3.0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("threshold 1/c = 1.70711"));
    let regimes: Vec<&str> = text
        .lines()
        .filter_map(|l| l.split_whitespace().last())
        .filter(|w| w.ends_with("critical"))
        .collect();
    assert_eq!(regimes, ["subcritical", "critical", "supercritical"]);
}

#[test]
fn spike_json() {
    let out = twedge(&[
        "spike", "--id", "--p", "50", "--n", "100", "--spikes", "1.2", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["spikes"][0]["regime"], "subcritical");
    assert!(v["c_tilde"].as_f64().unwrap() < v["c"].as_f64().unwrap());
}

#[test]
fn diagnose_reports() {
    let text = stdout(&twedge(&[
        "diagnose",
        "--atoms",
        "10:0.3,1:0.7",
        "--p",
        "100",
        "--n",
        "100",
    ]));
    assert!(text.contains("atom bound   0.646111"));
    assert!(text.contains("summary: PASS (failed = 0)"));

    let out = twedge(&["diagnose", "--id", "--p", "10", "--n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("n/p >= 1") && l.ends_with("FAIL")));
    assert!(text.contains("summary: FAIL (failed = 1)"));
}

#[test]
fn simulate_smoke_and_determinism() {
    let args = [
        "simulate", "--id", "--p", "4", "--n", "8", "--reps", "200", "--seed", "5",
    ];
    let a = twedge(&args);
    assert_eq!(a.status.code(), Some(0));
    let b = twedge(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("s,target,F_hat,two_se\n"));
    assert_eq!(text.lines().count(), 10);

    let one = twedge(&[
        "simulate", "--id", "--p", "4", "--n", "8", "--reps", "1", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 1);
    assert!(v.get("wall_time_secs").is_none());
}

#[test]
fn simulate_from_config_file_writes_outputs_and_manifest() {
    let dir = scratch("sim_config");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("sim.json");
    std::fs::write(
        &config,
        r#"{"n": 20, "p": 10, "model": {"kind": "toeplitz", "coefficients": [1.0, 0.2, 0.3], "p": 10},
            "replications": 50, "master_seed": 9}"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = twedge(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("simulate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["config"]["sim"]["replications"], 50);
    assert!(manifest["edge"]["mu"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);

    let bad = twedge(&["simulate", "--config", config.to_str().unwrap(), "--id", "--p", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn every_run_emits_one_manifest() {
    let out = twedge(&["solve", "--id", "--p", "10", "--n", "20"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.starts_with("manifest: ")).count(), 1);
    let json = stderr.lines().find_map(|l| l.strip_prefix("manifest: ")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config"]["model"]["kind"], "atoms");
    assert!(manifest["version"].is_string());
}

#[test]
fn outputs_are_idempotent() {
    for args in [
        vec!["solve", "--toeplitz", "1,0.2,0.3", "--p", "50", "--n", "100"],
        vec!["tw", "--table"],
        vec!["diagnose", "--id", "--p", "10", "--n", "5"],
    ] {
        assert_eq!(twedge(&args).stdout, twedge(&args).stdout, "{args:?}");
    }
}
