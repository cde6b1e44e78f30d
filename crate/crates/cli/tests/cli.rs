use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bec-transport"));
    c.env_remove("BEC_TRANSPORT_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn error_record(o: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("JSON error record on stderr");
    serde_json::from_str(line).unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut meta = Vec::new();
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix("# columns:") {
            columns = c.split_whitespace().map(String::from).collect();
        } else if let Some(m) = line.strip_prefix("# ") {
            meta.push(m.to_string());
        } else if !line.trim().is_empty() {
            rows.push(line.split_whitespace().map(|x| x.parse().unwrap()).collect());
        }
    }
    (meta, columns, rows)
}

const POLY: &str = "[protocol]\nkind = \"polynomial\"\ndistance = 1.6e-3\nt_f = 0.02\n";

#[test]
fn help_and_version_exit_zero() {
    assert!(run(&["--help"]).status.success());
    let v = run(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_two_with_record() {
    let o = run(&["design"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"]["kind"], "usage");
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["design", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"]["exit_code"], 2);
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{POLY}\n[numerics]\ntimestep = 1e-6\n"));
    let out = dir.path().join("out");
    let o = run(&["design", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "config");
    assert!(rec["error"]["message"].as_str().unwrap().contains("timestep"));
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", POLY);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = run(&["design", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["error"]["kind"], "io");
}

#[test]
fn unresolved_grid_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[protocol]\nkind = \"direct\"\ndistance = 1.6e-3\nt_f = 0.02\n");
    let out = dir.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--grid-points", "256"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_record(&o)["error"]["kind"], "numeric");
}

#[test]
fn design_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[protocol]\nkind = \"bangbang_displacement\"\ndistance = 1.6e-3\ndelta = 0.162e-3\n",
    );
    let out = dir.path().join("out");
    let o = run(&["design", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (meta, columns, rows) = table(&out.join("trajectory.dat"));
    assert_eq!(columns, ["t", "q0", "q0_dot", "q0_ddot", "q_c", "q_c_dot", "displacement", "segment"]);
    assert!(meta.iter().any(|m| m.starts_with("t_1 = ")));
    assert_eq!(meta.iter().filter(|m| m.starts_with("jump = ")).count(), 3);
    let last = rows.last().unwrap();
    assert!((last[4] - 1.6e-3).abs() < 1e-9);
    assert!(last[5].abs() < 1e-6);
    let max_disp = rows.iter().fold(0.0f64, |m, r| m.max(r[6].abs()));
    assert!(max_disp <= 0.162e-3 * (1.0 + 1e-6), "{max_disp}");

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("design.json")).unwrap()).unwrap();
    assert_eq!(summary["protocol"], "bangbang_displacement");
    assert!((summary["t_f"].as_f64().unwrap() - 0.02).abs() < 1e-4);
    let used = std::fs::read(out.join("config.used.toml")).unwrap();
    let digest = summary["config_digest"].as_str().unwrap();
    assert_eq!(digest.len(), "sha256:".len() + 64);
    let again = run(&["design", "--config", &cfg, "--out", dir.path().join("other").to_str().unwrap()]);
    assert!(again.status.success());
    let other: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("other/design.json")).unwrap()).unwrap();
    assert_eq!(other["config_digest"], summary["config_digest"]);
    assert_eq!(std::fs::read(dir.path().join("other/config.used.toml")).unwrap(), used);
}

#[test]
fn environment_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", POLY);
    let out = dir.path().join("env_out");
    let o = bin().args(["design", "--config", &cfg]).env("BEC_TRANSPORT_OUT", &out).output().unwrap();
    assert!(o.status.success());
    assert!(out.join("trajectory.dat").exists());
}

#[test]
fn verify_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[protocol]\nkind = \"compensating\"\ndistance = 1.6e-3\nt_f = 0.02\n\n[numerics]\nsnapshot_stride = 500\n",
    );
    let out = dir.path().join("out");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["final_fidelity", "excitation_energy", "max_displacement", "wall_time_s", "tool_version", "config"] {
        assert!(!s[key].is_null(), "{key}");
    }
    assert!(s["final_fidelity"].as_f64().unwrap() > 0.999);
    assert!(s["config_digest"].as_str().unwrap().starts_with("sha256:"));
    let (_, columns, rows) = table(&out.join("ground_state.dat"));
    assert_eq!(columns, ["q", "re_chi", "im_chi"]);
    assert!(rows.len() >= 64);
    let (_, columns, rows) = table(&out.join("snapshots.dat"));
    assert_eq!(columns, ["t", "q", "re_psi", "im_psi"]);
    assert!(!rows.is_empty());
    let kv = std::fs::read_to_string(out.join("propagation.txt")).unwrap();
    for key in ["final_fidelity", "excitation_energy", "norm_drift"] {
        assert!(kv.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key}");
    }
}

#[test]
fn noise_sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("{POLY}\n[noise]\nlambdas = [0.0, 7.6e-8]\nrealizations = 64\nseed = 5\n"),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["noise-sweep", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["noise-sweep", "--config", &cfg, "--out", b.to_str().unwrap(), "--sequential"]);
    assert!(o.status.success());
    let da = std::fs::read(a.join("sweep.dat")).unwrap();
    assert_eq!(da, std::fs::read(b.join("sweep.dat")).unwrap());
    let text = String::from_utf8(da).unwrap();
    assert!(text.lines().any(|l| l == "# columns: lambda g1_over_hbar t_f mean_fidelity std_error n seed"));
    let (_, _, rows) = table(&a.join("sweep.dat"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][3], rows[0][4]), (1.0, 0.0));
    assert!(rows[1][3] < 1.0);
    assert_eq!((rows[1][5], rows[1][6]), (64.0, 5.0));

    let c = dir.path().join("c");
    let o = run(&["noise-sweep", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "6"]);
    assert!(o.status.success());
    let (_, _, other) = table(&c.join("sweep.dat"));
    assert_ne!(other[1][3], rows[1][3]);
    assert_eq!(other[1][6], 6.0);
}

#[test]
fn noise_sweep_requires_noise_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", POLY);
    let o = run(&["noise-sweep", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}
