//! End-to-end tests of the binary: flag handling, exit codes, artifact
//! determinism across worker counts, and the documented output shapes.

use std::path::Path;
use std::process::{Command, Output};

fn startail(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_startail"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn tail_exact_prints_known_value() {
    let out = startail(&[
        "tail",
        "--exact",
        "--n",
        "3",
        "--p",
        "0.5",
        "--r",
        "2",
        "--threshold",
        "1",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0.5\n");
}

#[test]
fn sample_extremes_are_golden() {
    let out = startail(&["sample", "--n", "3", "--p", "1", "--seed", "9"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "3 3\n0 1\n0 2\n1 2\n");
    let out = startail(&["sample", "--n", "4", "--p", "0", "--seed", "1"]);
    assert_eq!(stdout(&out), "4 0\n");
}

#[test]
fn bounds_report_contains_mean() {
    let out = startail(&["bounds", "--n", "4", "--p", "0.5", "--r", "2", "--eps", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries = doc["reports"][0]["entries"].as_array().unwrap();
    let mu = entries.iter().find(|e| e["name"] == "mu").unwrap();
    assert_eq!(mu["value"], 3.0);
}

#[test]
fn usage_errors_exit_2() {
    // unknown flag -> clap usage error
    let out = startail(&["tail", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // invalid probability -> domain usage error
    let out = startail(&["sample", "--n", "3", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    // missing required parameter
    let out = startail(&["tail", "--exact", "--p", "0.5", "--threshold", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempdir("config");
    let config = dir.join("run.conf");
    std::fs::write(&config, "n=3\np=0.5\nr=2\nthreshold=1 # inline comment\n").unwrap();
    let out = startail(&["--config", config.to_str().unwrap(), "tail", "--exact"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0.5\n");
    // a flag beats the config value: threshold 4 has tail Pr(X >= 4) = 1/8
    let out = startail(&[
        "--config",
        config.to_str().unwrap(),
        "tail",
        "--exact",
        "--threshold",
        "2",
    ]);
    assert_eq!(stdout(&out), "0.125\n");
}

#[test]
fn sweep_is_byte_identical_across_worker_counts() {
    let dir = tempdir("sweep");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--grid-n".into(),
            "5,6".into(),
            "--grid-p".into(),
            "0.2,0.5".into(),
            "--grid-eps".into(),
            "1".into(),
            "--r".into(),
            "2".into(),
            "--estimator".into(),
            "mc".into(),
            "--reps".into(),
            "2000".into(),
            "--seed".into(),
            "17".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    let run = |path: &Path, threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_startail"))
            .args(args(path))
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .expect("binary runs");
        assert!(status.success());
    };
    run(&a, "1");
    run(&b, "4");
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "sweep differs across worker counts");
}

#[test]
fn verify_passes_and_artifact_is_stable() {
    let dir = tempdir("verify");
    let a = dir.join("report_a.txt");
    let b = dir.join("report_b.txt");
    for (path, threads) in [(&a, "2"), (&b, "8")] {
        let out = Command::new(env!("CARGO_BIN_EXE_startail"))
            .args(["verify", "--out", path.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "verify failed:\n{}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let report_a = std::fs::read_to_string(&a).unwrap();
    let report_b = std::fs::read_to_string(&b).unwrap();
    assert_eq!(report_a, report_b, "verify artifact differs across runs");
    assert!(report_a.contains("10/10 checks passed"));
    assert!(!report_a.contains("FAIL"));
}

#[test]
fn out_dir_env_redirects_bare_filenames() {
    let dir = tempdir("outdir");
    let out = Command::new(env!("CARGO_BIN_EXE_startail"))
        .args(["sample", "--n", "3", "--p", "1", "--out", "g.txt"])
        .env("STARTAIL_OUT_DIR", &dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(dir.join("g.txt")).unwrap(),
        "3 3\n0 1\n0 2\n1 2\n"
    );
}

#[test]
fn peel_emits_certificate_and_trace() {
    let out = startail(&[
        "peel", "--n", "5", "--p", "0.3", "--seed", "2", "--d", "4", "--t", "10000",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["certificate"]["verdict"].is_string());
    assert!(doc["trace"]["levels"].is_array());
    assert!(doc["x_full"].as_u64().is_some());
}

#[test]
fn iidsum_distribution_shape() {
    let out = startail(&["iidsum", "--n", "2", "--p", "0.5", "--r", "2"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let support = doc["distribution"]["support"].as_array().unwrap();
    // exact mode: [value, "num", "den"] triples with masses 9/16, 6/16, 1/16
    assert_eq!(support.len(), 3);
    assert_eq!(support[0][0], 0);
    assert_eq!(support[0][1], "9");
    assert_eq!(support[0][2], "16");
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("startail-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
