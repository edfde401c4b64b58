use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use debt_inflation::model::{self, ModelParams, SweepMode};
use debt_inflation::panel::{load_panel, save_panel};

fn debtinf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_debtinf")).args(args).env_remove("DEBTINF_THREADS").output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv_column(path: &Path, column: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn simulate_panel_file(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("panel_{seed}.csv"));
    let status = debtinf(&["simulate", "--kind", "panel", "--seed", seed, "--out", path_str(&out)]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    out
}

#[test]
fn singleton_grid_matches_library_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let run = debtinf(&["eq-sweep", "--pmin", "3", "--pmax", "3", "--points", "1", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let rows = model::sweep(&[3.0], &ModelParams::default_calibration(), SweepMode::MenuCost).unwrap();
    let mut expected = Vec::new();
    model::write_sweep_csv(&rows, &mut expected).unwrap();
    assert_eq!(fs::read(&out).unwrap(), expected);
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha = 1.5\n").unwrap();
    let out = dir.path().join("sweep.csv");
    let run = debtinf(&["eq-sweep", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());

    fs::write(&cfg, "gamma = 1\n").unwrap();
    let run = debtinf(&["eq-sweep", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn unknown_flag_and_missing_seed_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(debtinf(&["eq-sweep", "--frobnicate", "--out", path_str(&out)]).status.code(), Some(2));
    assert_eq!(debtinf(&["simulate", "--kind", "panel", "--out", path_str(&out)]).status.code(), Some(2));
    assert_eq!(debtinf(&["duration", "--simulate", "--out", path_str(&out)]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = fs::read(simulate_panel_file(dir.path(), "5")).unwrap();
    let b_path = dir.path().join("again.csv");
    let run = debtinf(&["simulate", "--kind", "panel", "--seed", "5", "--out", path_str(&b_path)]);
    assert!(run.status.success());
    assert_eq!(a, fs::read(&b_path).unwrap());
    let c = fs::read(simulate_panel_file(dir.path(), "6")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn simulate_then_estimate_recovers_the_planted_effect() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulate_panel_file(dir.path(), "3");
    let out = dir.path().join("did.csv");
    let report = dir.path().join("did.txt");
    let run = debtinf(&[
        "estimate",
        "--spec",
        "did",
        "--in",
        path_str(&panel),
        "--out",
        path_str(&out),
        "--report",
        path_str(&report),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let estimate: f64 = read_csv_column(&out, "estimate")[0].parse().unwrap();
    let se: f64 = read_csv_column(&out, "se")[0].parse().unwrap();
    assert!((estimate - 41.6).abs() < 3.0 * se, "estimate {estimate} se {se}");
    assert!(fs::read_to_string(&report).unwrap().contains("n_clusters = 700"));
}

#[test]
fn manifest_records_inputs_without_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulate_panel_file(dir.path(), "9");
    let sim_manifest = fs::read_to_string(dir.path().join("panel_9.csv.manifest")).unwrap();
    assert!(sim_manifest.contains("subcommand=simulate"));
    assert!(sim_manifest.contains("seed=9"));

    let out = dir.path().join("event.csv");
    let run = debtinf(&["estimate", "--spec", "event", "--in", path_str(&panel), "--out", path_str(&out)]);
    assert!(run.status.success());
    let manifest = fs::read_to_string(dir.path().join("event.csv.manifest")).unwrap();
    assert!(manifest.contains("input.panel.sha256="));
    for line in manifest.lines() {
        let (key, _) = line.split_once('=').unwrap();
        assert!(!key.contains("time") && !key.contains("date"), "{line}");
    }

    let again = dir.path().join("event2.csv");
    debtinf(&["estimate", "--spec", "event", "--in", path_str(&panel), "--out", path_str(&again)]);
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("output=")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(manifest), strip(fs::read_to_string(dir.path().join("event2.csv.manifest")).unwrap()));
}

#[test]
fn default_curve_header_and_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let run = debtinf(&["default-curve", "--points", "20", "--firm-mass", "1000", "--out", path_str(&out)]);
    assert!(run.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P,log_inflation,default_share,default_count,second_difference"));
    assert_eq!(lines.count(), 20);
    let share: f64 = read_csv_column(&out, "default_share")[5].parse().unwrap();
    let count: f64 = read_csv_column(&out, "default_count")[5].parse().unwrap();
    assert!((count - 1000.0 * share).abs() < 1e-9);
}

#[test]
fn estimation_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulate_panel_file(dir.path(), "4");
    let mut rows = load_panel(&panel).unwrap();
    for r in &mut rows {
        r.leverage_1917 = 0.4;
    }
    let flat = dir.path().join("flat.csv");
    save_panel(&rows, &flat).unwrap();
    let out = dir.path().join("did.csv");
    let run = debtinf(&["estimate", "--spec", "did", "--in", path_str(&flat), "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(1), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(!out.exists());
}

#[test]
fn unknown_control_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let panel = simulate_panel_file(dir.path(), "2");
    let out = dir.path().join("did.csv");
    let run = debtinf(&[
        "estimate",
        "--spec",
        "did",
        "--in",
        path_str(&panel),
        "--controls",
        "shoe_size",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn debt_shock_approaches_leverage() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    let mut text = String::from("date,level\n");
    let mut level = 1.0f64;
    for year in 1916..=1923 {
        text.push_str(&format!("{year}-12-31,{level}\n"));
        level *= 50.0;
    }
    fs::write(&prices, text).unwrap();
    let out = dir.path().join("shock.csv");
    let run = debtinf(&["debt-shock", "--prices", path_str(&prices), "--leverage", "0.43", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let values: Vec<f64> = read_csv_column(&out, "value").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(values[1], 0.0);
    assert!((values.last().unwrap() - 0.43).abs() < 1e-3);

    let run = debtinf(&["debt-shock", "--prices", path_str(&prices), "--leverage", "1.5", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(2));
}
