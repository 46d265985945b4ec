use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mupf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mupf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A fast manifest: few particles, short window.
fn small_manifest(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(
        &p,
        "seed = 3\n[filter]\nparticles = 60\nmemory = 4\n[scenario]\nmeasurements = 8\n",
    )
    .unwrap();
    p
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn simulate_writes_l_rows_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("contacts.csv");
    let out = mupf(&["simulate", "--contacts", "15", "--output", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,z");
    assert_eq!(lines.len(), 16);
    let truth: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("contacts.truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["contacts"].as_array().unwrap().len(), 15);
    assert_eq!(truth["schema_version"], 1);
}

#[test]
fn zero_contacts_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mupf(&[
        "simulate",
        "--contacts",
        "0",
        "--output",
        s(&dir.path().join("c.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("c.csv").exists());
}

#[test]
fn missing_mesh_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.obj");
    let out = mupf(&[
        "simulate",
        "--mesh",
        s(&missing),
        "--output",
        s(&dir.path().join("c.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.obj"));
}

#[test]
fn unknown_manifest_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[filter]\nparticels = 10\n").unwrap();
    let out = mupf(&["batch", "--config", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(mupf(&["simulate", "--config", s(&cfg), "--output", s(&a)])
        .status
        .success());
    assert!(mupf(&["simulate", "--config", s(&cfg), "--output", s(&b)])
        .status
        .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.truth.json")).unwrap(),
        fs::read(dir.path().join("b.truth.json")).unwrap()
    );

    let args = [
        "localize",
        "--config",
        s(&cfg),
        "--measurements",
        s(&a),
        "--no-timing",
    ];
    let r1 = mupf(&args);
    let r2 = mupf(&args);
    assert!(r1.status.success());
    assert_eq!(r1.stdout, r2.stdout);
}

#[test]
fn localize_reports_config_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let csv = dir.path().join("c.csv");
    let trace = dir.path().join("trace.csv");
    assert!(
        mupf(&["simulate", "--config", s(&cfg), "--output", s(&csv)])
            .status
            .success()
    );
    let out = mupf(&[
        "localize",
        "--config",
        s(&cfg),
        "--measurements",
        s(&csv),
        "--truth",
        s(&dir.path().join("c.truth.json")),
        "--emit-trace",
        s(&trace),
    ]);
    let report = json(&out);
    assert_eq!(report["config"]["particles"], 60);
    assert_eq!(report["config"]["sigma_p_means"], "variance");
    assert!((report["likelihood_sigma"].as_f64().unwrap() - 0.01).abs() < 1e-15);
    assert!(report["report"]["final_index"].as_f64().unwrap() >= 0.0);
    assert!(report["report"]["position_error"].is_number());
    assert!(report["report"]["elapsed"].is_number());
    let rows: Vec<String> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(rows[0], "t,index");
    assert_eq!(rows.len(), 9);
}

#[test]
fn localize_without_measurements_fails() {
    let out = mupf(&["localize"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("e.csv");
    fs::write(&empty, "x,y,z\n").unwrap();
    assert_eq!(
        mupf(&["localize", "--measurements", s(&empty)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn single_trial_summary_mirrors_the_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let report = json(&mupf(&[
        "batch",
        "--config",
        s(&cfg),
        "--trials",
        "1",
        "--no-timing",
    ]));
    let trial = &report["trials"][0];
    let summary = &report["summary"];
    assert_eq!(summary["trials"], 1);
    assert_eq!(summary["mean_final_index"], trial["final_index"]);
    assert_eq!(summary["median_final_index"], trial["final_index"]);
    assert_eq!(summary["mean_position_error"], trial["position_error"]);
    assert_eq!(
        summary["successes"],
        if trial["success"] == true { 1 } else { 0 }
    );
    assert!(summary["mean_elapsed"].is_null());
    assert_eq!(trial["seed"], 3);
}

#[test]
fn batch_seeds_are_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let report = json(&mupf(&[
        "batch",
        "--config",
        s(&cfg),
        "--trials",
        "3",
        "--seed",
        "10",
    ]));
    let seeds: Vec<u64> = report["trials"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, [10, 11, 12]);
}

#[test]
fn sweep_writes_one_row_per_memory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let csv = dir.path().join("sweep.csv");
    let out_json = dir.path().join("sweep.json");
    let out = mupf(&[
        "batch",
        "--config",
        s(&cfg),
        "--trials",
        "2",
        "--sweep-m",
        "1..3",
        "--csv",
        s(&csv),
        "--output",
        s(&out_json),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: Vec<String> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(rows[0], "m,mean_index,successes,trials");
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("3,") && rows[3].ends_with(",2"));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert_eq!(report["rows"][0]["memory"], 1);
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["simulation", "experimental", "box"] {
        let cfg = root.join("configs").join(format!("{name}.toml"));
        let dir = tempfile::tempdir().unwrap();
        let out = mupf(&[
            "simulate",
            "--config",
            s(&cfg),
            "--output",
            s(&dir.path().join("c.csv")),
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn serial_and_parallel_reports_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_manifest(dir.path());
    let serial = dir.path().join("serial.toml");
    fs::write(
        &serial,
        fs::read_to_string(&cfg)
            .unwrap()
            .replace("[filter]\n", "[filter]\nparallel = false\n"),
    )
    .unwrap();
    let a = mupf(&["batch", "--config", s(&cfg), "--trials", "2", "--no-timing"]);
    let b = mupf(&[
        "batch",
        "--config",
        s(&serial),
        "--trials",
        "2",
        "--no-timing",
    ]);
    let c = Command::new(env!("CARGO_BIN_EXE_mupf"))
        .args(["batch", "--config", s(&cfg), "--trials", "2", "--no-timing"])
        .env("RAYON_NUM_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}
