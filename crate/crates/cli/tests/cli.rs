use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BATH: &str = "b_gauss = 10.0\nabundance = 0.01\nr_max_nm = 3.0\n[tau]\npoints = 1001\n";

fn echoq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_echoq"))
        .args(args)
        .current_dir(dir)
        .env_remove("ECHOQ_SEED")
        .output()
        .unwrap()
}

fn setup(name: &str, body: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    (dir, path)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn bath_writes_signal_and_manifest() {
    let (dir, _) = setup("bath.toml", BATH);
    let out = echoq(&["bath", "--config", "bath.toml", "--seed", "5", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let csv = std::fs::read_to_string(run.join("signal.csv")).unwrap();
    let m = manifest(&run);
    assert_eq!(m["seed"], 5);
    let hash = m["config_hash"].as_str().unwrap();
    assert!(csv.contains(hash));
    assert!(csv.contains("tau_s,t_total_s,I,Q,Lambda,Phi_rad"));
    assert!(run.join("bath.json").exists());
}

#[test]
fn bath_is_deterministic() {
    let (dir, _) = setup("bath.toml", BATH);
    for out in ["a", "b"] {
        assert_eq!(echoq(&["bath", "--config", "bath.toml", "--seed", "9", "--out", out], dir.path()).status.code(), Some(0));
    }
    let read = |d: &str| std::fs::read(dir.path().join(d).join("signal.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn seed_falls_back_to_environment() {
    let (dir, _) = setup("bath.toml", BATH);
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_echoq"));
        cmd.args(args).current_dir(dir.path()).env_remove("ECHOQ_SEED");
        if let Some(v) = env {
            cmd.env("ECHOQ_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
    };
    run(&["bath", "--config", "bath.toml", "--out", "env"], Some("42"));
    run(&["bath", "--config", "bath.toml", "--out", "flag", "--seed", "7"], Some("42"));
    run(&["bath", "--config", "bath.toml", "--out", "none"], None);
    assert_eq!(manifest(&dir.path().join("env"))["seed"], 42);
    assert_eq!(manifest(&dir.path().join("flag"))["seed"], 7);
    assert_eq!(manifest(&dir.path().join("none"))["seed"], 0);
}

#[test]
fn fit_and_fft_round_trip() {
    let (dir, _) = setup("bath.toml", BATH);
    assert!(echoq(&["bath", "--config", "bath.toml", "--out", "run"], dir.path()).status.success());
    let fit = echoq(&["fit", "run/signal.csv", "--config", "bath.toml", "--out", "fit"], dir.path());
    assert_eq!(fit.status.code(), Some(0), "{}", String::from_utf8_lossy(&fit.stderr));
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit/fit.json")).unwrap()).unwrap();
    assert!(body["fit"]["varpi"].as_f64().unwrap().is_finite());
    let fft = echoq(&["fft", "run/signal.csv", "--window", "rectangular", "--out", "fft"], dir.path());
    assert_eq!(fft.status.code(), Some(0));
    let spectrum = std::fs::read_to_string(dir.path().join("fft/spectrum.csv")).unwrap();
    assert!(spectrum.contains("frequency_hz,I_re,I_im,Q_re,Q_im,I_abs,Q_abs"));
}

#[test]
fn fit_failure_exits_3_with_record() {
    let (dir, _) = setup("bath.toml", "b_gauss = 10.0\nabundance = 0.01\nr_max_nm = 3.0\n[tau]\nstop_s = 2.0e-5\n");
    assert!(echoq(&["bath", "--config", "bath.toml", "--out", "run"], dir.path()).status.success());
    let out = echoq(&["fit", "run/signal.csv", "--out", "fit"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit/fit_failure.json")).unwrap()).unwrap();
    assert_eq!(body["failure"]["kind"], "revival_outside_grid");
}

#[test]
fn config_hash_mismatch_needs_force() {
    let (dir, _) = setup("bath.toml", BATH);
    std::fs::write(dir.path().join("other.toml"), BATH.replace("10.0", "12.0")).unwrap();
    assert!(echoq(&["bath", "--config", "bath.toml", "--out", "run"], dir.path()).status.success());
    let refused = echoq(&["fit", "run/signal.csv", "--config", "other.toml", "--out", "a"], dir.path());
    assert_eq!(refused.status.code(), Some(2));
    let forced = echoq(&["fit", "run/signal.csv", "--config", "other.toml", "--force", "--out", "b"], dir.path());
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn malformed_input_exits_2() {
    let (dir, _) = setup("bad.csv", "tau_s,I,Q\n0.0,1.0\n");
    assert_eq!(echoq(&["fit", "bad.csv"], dir.path()).status.code(), Some(2));
    assert_eq!(echoq(&["fft", "missing.csv"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.toml"), "b_gauss = 1.0\nabundance = 0.1\nbogus = 1\n").unwrap();
    assert_eq!(echoq(&["bath", "--config", "bad.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(echoq(&["bath"], dir.path()).status.code(), Some(1));
    assert_eq!(echoq(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(echoq(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn existing_outputs_are_not_overwritten() {
    let (dir, _) = setup("bath.toml", BATH);
    assert!(echoq(&["bath", "--config", "bath.toml", "--out", "run"], dir.path()).status.success());
    assert_eq!(echoq(&["bath", "--config", "bath.toml", "--out", "run"], dir.path()).status.code(), Some(1));
    assert!(echoq(&["bath", "--config", "bath.toml", "--out", "run", "--force"], dir.path()).status.success());
}
