use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stoch_euler::harness::{RunManifest, MANIFEST_NAME};

const BIN: &str = env!("CARGO_BIN_EXE_stoch-euler");

const EULERIAN: &str = r#"
experiment = "eulerian"
seed = 3

[eulerian]
n = 16
dt = 1e-3
t_end = 0.02
norm_stride = 5

[initial]
preset = "random-smooth"
k_max = 3

[noise]
kind = "power-law"
k_max = 2
"#;

fn run(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("STOCH_EULER_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn eulerian_run_writes_verified_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EULERIAN);
    let out = tmp.path().join("out");
    let o = run(&["run-eulerian", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "stdout:\n{stdout}\nstderr:\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout.contains("manifest:"));

    let m = manifest(&out);
    assert_eq!(m.command, "run-eulerian");
    assert!(m.all_passed);
    assert!(!m.outputs.is_empty());
    assert!(m.verify(&out).is_empty());
    // The echoed config reparses to the same run.
    let echoed = stoch_euler::harness::parse_config(&m.config).unwrap();
    assert_eq!(echoed.eulerian.n, 16);
    assert_eq!(echoed.seed, 3);
}

#[test]
fn same_config_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EULERIAN);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        assert_eq!(run(&["run-eulerian", "--config", &cfg, "--out", d.to_str().unwrap()], &[]).status.code(), Some(0));
    }
    assert_eq!(manifest(&a).outputs, manifest(&b).outputs);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), EULERIAN);
    let root = tmp.path().join("root");
    let o = run(&["run-eulerian", "--config", &cfg], &[("STOCH_EULER_OUT", &root)]);
    assert_eq!(o.status.code(), Some(0));
    let dirs: Vec<_> = fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].file_name().unwrap().to_str().unwrap().starts_with("run-eulerian-"));
    assert!(dirs[0].join(MANIFEST_NAME).exists());
}

#[test]
fn invalid_config_lists_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "experiment = \"eulerian\"\n[eulerian]\nn = 16\ndt = -1.0\nt_end = 0.1\n[noise]\nkind = \"bogus\"\n",
    );
    let o = run(&["run-eulerian", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("eulerian.dt"), "{err}");
    assert!(err.contains("noise.kind"), "{err}");
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn failing_check_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{EULERIAN}\n[flow]\nm = 16\ntol_vol = 1e-300\n").replace("\"eulerian\"", "\"equivalence\""));
    let out = tmp.path().join("out");
    let o = run(&["check-equivalence", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).lines().any(|l| l.starts_with("FAIL")));
    let m = manifest(&out);
    assert!(!m.all_passed);
    assert!(m.verify(&out).is_empty());
}

#[test]
fn accept_selection_prints_one_line_per_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("acc");
    let o = run(&["accept", "--selection", "A8,A11", "--out", out.to_str().unwrap()], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    let lines: Vec<_> = stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 2, "{stdout}");
    assert!(lines[0].starts_with("PASS A8"));
    assert!(lines[1].starts_with("PASS A11"));
    assert!(manifest(&out).verify(&out).is_empty());
}

#[test]
fn unknown_selection_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["accept", "--selection", "A13", "--out", tmp.path().join("acc").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
}
