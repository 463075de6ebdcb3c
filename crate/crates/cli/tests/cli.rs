use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_critical-otto");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CRITICAL_OTTO_THREADS").output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn small(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> =
        ["--L", "20", "--h1", "10", "--h2", "1", "--Th", "1000", "--tau1", "2", "--dt-max", "1e-2"].map(String::from).to_vec();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_small(cmd: &str, extra: &[&str]) -> Output {
    let mut args = vec![cmd.to_string()];
    args.extend(small(extra));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn reference_cycle_is_an_engine() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "cycle.csv");
    let o = run(&["cycle", "--L", "100", "--h1", "10", "--h2", "1", "--Th", "1000", "--Tc", "1", "--tau1", "10", "--tau2", "100", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("regime  = engine"));
    for key in ["E_A", "E_D", "Q_in", "Q_out", "W~", "W - W~", "eta", "P "] {
        assert!(stdout.contains(key), "{key}");
    }
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(column(&csv, "regime"), vec!["engine"]);
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn equal_fields_and_baths_give_a_zero_work_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "cycle.csv");
    let o = run(&["cycle", "--L", "20", "--h1", "5", "--h2", "5", "--Th", "2", "--Tc", "2", "--tau2", "3", "--out", &out]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&csv, "W"), vec!["0.0"]);
    assert_eq!(column(&csv, "Q_in"), vec!["0.0"]);
    assert_eq!(column(&csv, "eta"), vec![""]);
}

#[test]
fn missing_cold_temperature_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sub/cycle.csv");
    let o = run_small("cycle", &["--tau2", "5", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--Tc"));
    assert!(!dir.path().join("sub").exists());
}

#[test]
fn cold_bath_hotter_than_hot_bath_is_a_contradiction() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "cycle.csv");
    let o = run_small("cycle", &["--Tc", "2000", "--tau2", "5", "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn malformed_flags_are_usage_errors() {
    assert_eq!(run(&["cycle", "--L"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--axis", "h", "--grid", "list:1"]).status.code(), Some(2));
    assert_eq!(run_small("sweep", &["--axis", "tau2", "--grid", "list:", "--Tc", "1"]).status.code(), Some(2));
    assert_eq!(run_small("sweep", &["--axis", "tau2", "--grid", "log:1:10", "--Tc", "1"]).status.code(), Some(2));
    assert_eq!(run_small("sweep", &["--axis", "tau2", "--grid", "list:3,2", "--Tc", "1"]).status.code(), Some(2));
    assert_eq!(run_small("cycle", &["--Tc", "1", "--tau2", "1", "--power-denominator", "nope"]).status.code(), Some(2));
    assert_eq!(run_small("analytic", &["--tau2", "5"]).status.code(), Some(2));
}

#[test]
fn golden_csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cycle = path(dir.path(), "cycle.csv");
    assert!(run_small("cycle", &["--Tc", "1", "--tau2", "5", "--out", &cycle]).status.success());
    let result_cols = "E_A,E_B,E_C,E_D,Q_in,Q_out,W,W_tilde,excess,eta,P,regime,E_A_excess,E_C_residual";
    let first = |p: &str| std::fs::read_to_string(p).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first(&cycle), format!("tau2,T_C,{result_cols}"));

    let d2 = tempfile::tempdir().unwrap();
    let sweep = path(d2.path(), "sweep.csv");
    assert!(run_small("sweep", &["--axis", "Tc", "--grid", "list:1,2,4", "--tau2", "5", "--out", &sweep]).status.success());
    assert_eq!(first(&sweep), format!("T_C,{result_cols}"));

    let d3 = tempfile::tempdir().unwrap();
    let tau = path(d3.path(), "taumin.csv");
    let o = run_small("taumin", &["--Tc-grid", "list:1,2", "--tau2-grid", "log:1:100:6", "--epsilon", "0.5", "--out", &tau]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first(&tau), "T_C,tau_min_grid,tau_min_refined,W_tilde_abs,P_abs,excess_at_tau_min,epsilon,censored");

    let d4 = tempfile::tempdir().unwrap();
    let an = path(d4.path(), "analytic.csv");
    assert!(run_small("analytic", &["--Tc-grid", "list:3", "--tau2", "5", "--out", &an]).status.success());
    assert_eq!(first(&an), "tau2,T_C,numerical_excess,analytic_sum,analytic_scaled,relative_deviation");
    assert_eq!(std::fs::read_to_string(&an).unwrap().lines().count(), 2);
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--axis", "tau2", "--grid", "log:1:30:7", "--Tc", "0.7", "--fit-window", "3:30"];
    let oa = run_small("sweep", &[&args[..], &["--threads", "1", "--out", &path(a.path(), "s.csv"), "--plot", &path(a.path(), "s.svg")]].concat());
    let ob = run_small("sweep", &[&args[..], &["--threads", "3", "--out", &path(b.path(), "s.csv"), "--plot", &path(b.path(), "s.svg")]].concat());
    assert!(oa.status.success() && ob.status.success());
    for f in ["s.csv", "s.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let manifest = std::fs::read_to_string(b.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("threads = 3"));
    assert!(manifest.contains("threads_source = \"flag\""));
}

#[test]
fn thread_count_from_environment_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "cycle.csv");
    let mut args = vec!["cycle".to_string()];
    args.extend(small(&["--Tc", "1", "--tau2", "2", "--out", &out]));
    let o = Command::new(BIN).args(&args).env("CRITICAL_OTTO_THREADS", "2").output().unwrap();
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("threads = 2"));
    assert!(manifest.contains("threads_source = \"env\""));
}

#[test]
fn manifest_verifies_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "sweep.csv");
    assert!(run_small("sweep", &["--axis", "Tc", "--grid", "list:1,2", "--tau2", "3", "--out", &out]).status.success());
    let manifests = std::fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.toml").count();
    assert_eq!(manifests, 1);
    let d = dir.path().to_str().unwrap();
    assert!(run(&["verify", d]).status.success());
    std::fs::write(&out, "tampered\n").unwrap();
    assert_eq!(run(&["verify", d]).status.code(), Some(1));
}

#[test]
fn plot_regenerates_the_sweep_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "sweep.csv");
    let svg = path(dir.path(), "sweep.svg");
    let o = run_small("sweep", &["--axis", "tau2", "--grid", "log:2:20:5", "--Tc", "1", "--fit-window", "2:20", "--out", &csv, "--plot", &svg]);
    assert!(o.status.success());
    let again = path(dir.path(), "again.svg");
    assert!(run(&["plot", "--csv", &csv, "--x", "tau2", "--y", "excess", "--fit-window", "2:20", "--out", &again]).status.success());
    assert_eq!(std::fs::read(&svg).unwrap(), std::fs::read(&again).unwrap());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains(" again.svg") && manifest.contains(" sweep.svg"));
    assert!(run(&["verify", dir.path().to_str().unwrap()]).status.success());
}

#[test]
fn config_file_is_overridden_by_flags_and_manifest_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "L = 20\nh1 = 10\nh2 = 1\nTh = 1000\nTc = 5\ntau1 = 2\ntau2 = 4\ndt_max = 1e-2\n").unwrap();
    let first = dir.path().join("one");
    let out1 = path(&first, "cycle.csv");
    assert!(run(&["cycle", "--config", cfg.to_str().unwrap(), "--Tc", "1", "--out", &out1]).status.success());
    let csv1 = std::fs::read_to_string(&out1).unwrap();
    assert_eq!(column(&csv1, "T_C"), vec!["1.0"]);
    assert_eq!(column(&csv1, "tau2"), vec!["4.0"]);

    let out2 = path(&dir.path().join("two"), "cycle.csv");
    let manifest = first.join("manifest.toml");
    assert!(run(&["cycle", "--config", manifest.to_str().unwrap(), "--out", &out2]).status.success());
    assert_eq!(csv1, std::fs::read_to_string(&out2).unwrap());

    std::fs::write(&cfg, "Lx = 20\n").unwrap();
    assert_eq!(run(&["cycle", "--config", cfg.to_str().unwrap(), "--Tc", "1", "--tau2", "1"]).status.code(), Some(2));
}

#[test]
fn huge_epsilon_left_censors_everything_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "taumin.csv");
    let o = run_small("taumin", &["--Tc-grid", "list:1,2,4", "--tau2-grid", "log:1:10:3", "--epsilon", "1e9", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("left-censored"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&csv, "censored"), vec!["true"; 3]);
}

#[test]
fn tiny_epsilon_reports_not_found_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "taumin.csv");
    let o = run_small("taumin", &["--Tc-grid", "list:1", "--tau2-grid", "log:1:10:3", "--epsilon", "1e-9", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&std::fs::read_to_string(&out).unwrap(), "censored"), vec!["not_found"]);
}

#[test]
fn analytic_near_zero_temperature_uses_full_tanh() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "analytic.csv");
    let o = run_small("analytic", &["--Tc-grid", "list:1e-6", "--tau2", "5", "--out", &out]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let dev: f64 = column(&csv, "relative_deviation")[0].parse().unwrap();
    assert!(dev.abs() < 1e-12);
}
