//! End-to-end checks of the binary: exit codes, config merging, artifact
//! shapes, and the report gate.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_opuc-lab")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg("1")
        .args(args)
        .output()
        .expect("spawn opuc-lab")
}

fn gen_random(out: &Path, name: &str, n_max: &str) {
    let o = run(
        out,
        &[
            "gen", "--family", "random", "--gamma", "0.6", "--margin", "0.2", "--seed", "4",
            "--n-max", n_max, "--name", name,
        ],
    );
    assert!(o.status.success());
}

#[test]
fn gen_writes_sequence_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen", "--family", "power", "--c", "0.5", "--delta", "1", "--seed", "7", "--n-max",
            "128",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("seq.csv")).unwrap();
    assert!(csv.starts_with("n,re,im\n"));
    assert_eq!(csv.lines().count(), 129);
    assert!(dir.path().join("seq.json").exists());
    assert!(dir.path().join("seq.manifest.json").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.json");
    std::fs::write(
        &cfg,
        r#"{"family": "power", "c": 0.5, "delta": 1.0, "seed": 7, "n_max": 64}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "gen",
            "--config",
            cfg.to_str().unwrap(),
            "--c",
            "0.25",
            "--name",
            "merged",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("merged.csv")).unwrap();
    // first modulus equals the overriding c
    let first = csv.lines().nth(1).unwrap();
    let fields: Vec<f64> = first
        .split(',')
        .skip(1)
        .map(|t| t.parse().unwrap())
        .collect();
    let modulus = (fields[0] * fields[0] + fields[1] * fields[1]).sqrt();
    assert!((modulus - 0.25).abs() < 1e-12);
}

#[test]
fn schema_violations_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    // unknown key in config
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"family": "power", "c": 0.5, "turbo": true}"#).unwrap();
    let o = run(dir.path(), &["gen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("bad.json"), "stderr: {msg}");

    // missing required parameter
    let o = run(
        dir.path(),
        &["gen", "--family", "power", "--c", "0.5", "--delta", "1"],
    );
    assert_eq!(o.status.code(), Some(64));

    // coefficient leaving the disk
    let o = run(
        dir.path(),
        &[
            "gen", "--family", "power", "--c", "1.0", "--delta", "1", "--n-max", "8",
        ],
    );
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn short_l_grid_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    gen_random(dir.path(), "rw", "256");
    let seq = dir.path().join("rw.json");
    let o = run(
        dir.path(),
        &[
            "wkb-bench",
            "--seq",
            seq.to_str().unwrap(),
            "--ratio",
            "0.333",
            "--level",
            "4",
            "--l-grid",
            "8,16,32",
        ],
    );
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("4 distinct"));
}

#[test]
fn all_zero_partition_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["gen", "--family", "zero", "--n-max", "64", "--name", "free"],
    );
    assert!(o.status.success());
    let seq = dir.path().join("free.json");
    let o = run(
        dir.path(),
        &[
            "partition-diag",
            "--seq",
            seq.to_str().unwrap(),
            "--d",
            "0.7",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("finitely supported"));
}

#[test]
fn free_scan_reports_zero_sup() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen", "--family", "zero", "--n-max", "512", "--name", "free",
        ],
    );
    assert!(o.status.success());
    let seq = dir.path().join("free.json");
    let o = run(
        dir.path(),
        &[
            "scan",
            "--seq",
            seq.to_str().unwrap(),
            "--grid-size",
            "64",
            "--n-max",
            "512",
            "--name",
            "fs",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("fs.csv")).unwrap();
    assert!(csv.starts_with("eta,sup_log_t,argmax_n,failed\n"));
    for line in csv.lines().skip(1) {
        let sup: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(sup.abs() <= 1e-12);
        assert!(line.ends_with(",0"));
    }
}

#[test]
fn trajectory_commands_write_expected_headers() {
    let dir = tempfile::tempdir().unwrap();
    gen_random(dir.path(), "rw", "256");
    let seq = dir.path().join("rw.json");
    let o = run(
        dir.path(),
        &[
            "evolve",
            "--seq",
            seq.to_str().unwrap(),
            "--eta",
            "1.2",
            "--n-max",
            "100",
        ],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("szego-traj.csv")).unwrap();
    assert!(csv.starts_with("n,re_phi,im_phi,re_psi,im_psi,log_t_norm\n"));

    let o = run(
        dir.path(),
        &[
            "prufer-check",
            "--seq",
            seq.to_str().unwrap(),
            "--eta",
            "1.2",
            "--beta",
            "pi",
        ],
    );
    // beta must be numeric here ("pi" is only a betas-list token): a
    // malformed flag is a schema violation
    assert_eq!(o.status.code(), Some(64));

    let o = run(
        dir.path(),
        &[
            "prufer-check",
            "--seq",
            seq.to_str().unwrap(),
            "--eta",
            "1.2",
            "--n-max",
            "100",
        ],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("prufer-traj.csv")).unwrap();
    assert!(csv.starts_with("n,log_r,theta,tau,fs_residual\n"));
}

#[test]
fn report_merges_and_gates_versions() {
    let dir = tempfile::tempdir().unwrap();
    gen_random(dir.path(), "rw", "512");
    let seq = dir.path().join("rw.json");
    let o = run(
        dir.path(),
        &[
            "scan",
            "--seq",
            seq.to_str().unwrap(),
            "--grid-size",
            "64",
            "--n-max",
            "512",
            "--name",
            "sc",
        ],
    );
    assert!(o.status.success());
    let manifest = dir.path().join("sc.manifest.json");

    // empty input list: header-only table, exit 0
    let o = run(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(table.lines().count(), 1);

    // one manifest: one row
    let o = run(dir.path(), &["report", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("scan,sc,"));

    // version mismatch: exit 65
    let text = std::fs::read_to_string(&manifest).unwrap();
    let bumped = text.replacen("\"artifact_version\": 1", "\"artifact_version\": 999", 1);
    let old = dir.path().join("old.manifest.json");
    std::fs::write(&old, bumped).unwrap();
    let o = run(
        dir.path(),
        &["report", manifest.to_str().unwrap(), old.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(65));
}

#[test]
fn worker_env_var_sets_pool_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(bin())
        .arg("--out")
        .arg(dir.path())
        .env("OPUC_LAB_WORKERS", "2")
        .args(["gen", "--family", "zero", "--n-max", "16"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("seq.manifest.json")).unwrap();
    assert!(manifest.contains("\"workers\": 2"), "{manifest}");
}

#[test]
fn commands_do_not_mutate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    gen_random(dir.path(), "rw", "256");
    let seq = dir.path().join("rw.json");
    let before = std::fs::read(&seq).unwrap();
    let o = run(
        dir.path(),
        &[
            "scan",
            "--seq",
            seq.to_str().unwrap(),
            "--grid-size",
            "32",
            "--n-max",
            "256",
            "--name",
            "sc",
        ],
    );
    assert!(o.status.success());
    assert_eq!(std::fs::read(&seq).unwrap(), before);
}
