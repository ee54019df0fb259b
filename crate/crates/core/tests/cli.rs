use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfc-aqm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_trace_metrics_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--scenario", "disturb-sine", "--out", path(dir.path()), "--emit-figures"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3501);
    assert!(csv.starts_with("t,q,dq,ref,u_raw,u,du,F_est,F_fcst,dq_hat,dist\n"));
    let sidecar = fs::read_to_string(dir.path().join("metrics.toml")).unwrap();
    assert!(sidecar.contains("[metrics]") && sidecar.contains("[provenance]"));
    for panel in ["control", "output", "estimators", "disturbance"] {
        assert!(dir.path().join(format!("fig-disturb-sine-{panel}.csv")).exists(), "{panel}");
    }
}

#[test]
fn csv_is_byte_stable_across_processes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(bin(&["run", "--scenario", "disturb-random", "--out", path(d.path())]).status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trace.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "run", "--scenario", "nominal", "--out", path(dir.path()), "--duration", "2", "--ts", "0.005", "--seed", "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 401);
    let sidecar = fs::read_to_string(dir.path().join("metrics.toml")).unwrap();
    assert!(sidecar.contains("seed = 5"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = path(dir.path());
    assert_eq!(bin(&["run", "--scenario", "no-such-preset", "--out", out_dir]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--scenario", "nominal", "--out", out_dir, "--ts", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--scenario", "nominal", "--out", out_dir, "--gain", "x"]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[run]\nduration = 1.0\nbogus = 3\n").unwrap();
    let out = bin(&["run", "--scenario", path(&bad), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let diverging = bin(&["run", "--scenario", "nominal", "--out", out_dir, "--gain", "paper"]);
    assert_eq!(diverging.status.code(), Some(3));
}

#[test]
fn config_file_round_trips_through_show_config() {
    let dir = tempfile::tempdir().unwrap();
    let shown = bin(&["show-config", "--scenario", "n-mismatch"]);
    assert!(shown.status.success());
    let file = dir.path().join("mine.toml");
    fs::write(&file, &shown.stdout).unwrap();
    let again = bin(&["show-config", "--scenario", path(&file)]);
    assert_eq!(again.stdout, shown.stdout);

    let out_dir = dir.path().join("out");
    let ran = bin(&["run", "--scenario", path(&file), "--out", path(&out_dir)]);
    assert!(ran.status.success(), "{}", String::from_utf8_lossy(&ran.stderr));
    let preset_dir = dir.path().join("preset");
    assert!(bin(&["run", "--scenario", "n-mismatch", "--out", path(&preset_dir)]).status.success());
    assert_eq!(
        fs::read(out_dir.join("trace.csv")).unwrap(),
        fs::read(preset_dir.join("trace.csv")).unwrap()
    );
}

#[test]
fn list_and_batch() {
    let listed = bin(&["list-presets"]);
    let names: Vec<String> = String::from_utf8(listed.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(names.len(), 7);
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["batch", "--all", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in &names {
        assert!(dir.path().join(name).join("trace.csv").exists(), "{name}");
    }
}

#[test]
fn metrics_sidecar_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(bin(&["run", "--scenario", "disturb-random", "--out", path(&first), "--seed", "11"]).status.success());
    let replay = bin(&["run", "--scenario", path(&first.join("metrics.toml")), "--out", path(&second)]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(
        fs::read(first.join("trace.csv")).unwrap(),
        fs::read(second.join("trace.csv")).unwrap()
    );
}
