use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cspmkt_cli::output::CSV_HEADER;
use cspmkt_cli::{DuopolyReport, MultihomeReport};
use cspmkt_core::{EquilibriumOutcome, Regime, SweepGrid};
use tempfile::TempDir;

const MONO: &str = r#"{"model": "monopoly", "params": {"u0_b": 1.9, "u0_c": 2.1, "b_b": 0.5,
    "b_c": 0.7, "t_b": 1.1, "t_c": 1.5, "f_b": 0.73, "f_c": 0.75}}"#;

const DUO: &str = r#"{"model": "duopoly", "params": {"alpha_n": 0.7, "alpha_w": 0.6, "beta_n": 0.5,
    "beta_w": 0.8, "t_b": 1.1, "t_c": 1.2, "f_wb": 0.7, "f_nb": 0.73, "f_wc": 0.73, "f_nc": 0.75}}"#;

const MULTI: &str = r#"{"model": "multihome", "params": {"alpha_n": 0.7, "alpha_w": 0.6, "beta_n": 0,
    "beta_w": 0, "t_b": 0, "t_c": 1.2, "f_wb": 0.15, "f_nb": 0.15, "f_wc": 0.3, "f_nc": 0.35, "u0_b": 0}}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn cspmkt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspmkt"))
        .args(args)
        .env_remove("CSPMKT_THREADS")
        .output()
        .unwrap()
}

fn run_with(dir: &TempDir, text: &str, args: &[&str]) -> Output {
    let cfg = write(dir, "cfg.json", text);
    let mut all = args.to_vec();
    let cfg = cfg.to_string_lossy().into_owned();
    all.extend(["--config", &cfg]);
    cspmkt(&all)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn monopoly_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, MONO, &["monopoly"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let parsed: EquilibriumOutcome = serde_json::from_slice(&out.stdout).unwrap();
    assert!((parsed.profit_w() - 1.15378).abs() < 1e-5);
    let again = serde_json::to_vec_pretty(&parsed).unwrap();
    assert_eq!(&again[..], &out.stdout[..out.stdout.len() - 1]);
}

#[test]
fn duopoly_report_parses() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, DUO, &["duopoly", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r: DuopolyReport = serde_json::from_slice(&out.stdout).unwrap();
    let x = r.outcome.duopoly_prices().unwrap();
    assert!((x.p_wb - 1.14333).abs() < 1e-5 && (x.p_nc - 1.24333).abs() < 1e-5);
}

#[test]
fn multihome_report_includes_deviation() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, MULTI, &["multihome"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r: MultihomeReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.equilibrium.regime, Regime::Interior);
    assert!(r.deviation.unwrap().dominates);
}

#[test]
fn csv_output_has_the_fixed_header() {
    let dir = TempDir::new().unwrap();
    let out = run_with(
        &dir,
        DUO,
        &["sweep", "--x", "alpha_plus:0.9:2.7:4", "--y", "alpha_minus:-0.7:0.7:3"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.split(',').count() == CSV_HEADER.len()));
    assert!(rows[0].starts_with("alpha_plus,0.9,alpha_minus,-0.7,"));

    let out = run_with(&dir, MONO, &["monopoly", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn sweep_json_and_file_output() {
    let dir = TempDir::new().unwrap();
    let dest = dir.path().join("grid.json");
    let dest_s = dest.to_string_lossy().into_owned();
    let out = run_with(
        &dir,
        MONO,
        &[
            "sweep",
            "--format",
            "json",
            "--out",
            &dest_s,
            "--x",
            "t_b:1:2:3",
            "--y",
            "t_c:1:2:2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let grid: SweepGrid = serde_json::from_slice(&std::fs::read(&dest).unwrap()).unwrap();
    assert_eq!(grid.cells.len(), 6);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2, "temporary file left behind");
}

#[test]
fn unknown_parameter_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, &MONO.replace("\"f_c\"", "\"gamma\": 1, \"f_c\""), &["monopoly"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma"));
}

#[test]
fn empty_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, "{}", &["monopoly"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("model") && msg.contains("params"), "{msg}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cspmkt(&["monopoly"]).status.code(), Some(2));
    assert_eq!(cspmkt(&["nonsense"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    assert_eq!(run_with(&dir, MONO, &["duopoly"]).status.code(), Some(2));
    assert_eq!(
        run_with(&dir, MONO, &["monopoly", "--eta", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run_with(&dir, MONO, &["monopoly", "--x", "t_b:1:2:3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run_with(&dir, MONO, &["sweep", "--x", "gamma:1:2:3"]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("absent.json");
    assert_eq!(
        cspmkt(&["monopoly", "--config", &missing.to_string_lossy()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn negative_eta_exits_2() {
    let dir = TempDir::new().unwrap();
    let text = DUO.replace("\"duopoly\"", "\"constrained\"");
    let out = run_with(&dir, &text, &["constrained", "--eta", "-0.1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn negative_congestion_fails_the_a0_gate() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, &MONO.replace("\"t_b\": 1.1", "\"t_b\": -1.1"), &["monopoly"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("A0"));
}

#[test]
fn gating_failure_exits_4_with_report() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, &MONO.replace("\"b_b\": 0.5", "\"b_b\": 1.9"), &["monopoly"]);
    assert_eq!(out.status.code(), Some(4));
    let msg = stderr(&out);
    assert!(msg.contains("A1") && msg.contains("FAIL"), "{msg}");
}

#[test]
fn solver_failure_exits_3() {
    // Worksite rate far above congestion: the stationary point is not an
    // equilibrium.
    let dir = TempDir::new().unwrap();
    let text = DUO
        .replace("\"alpha_w\": 0.6", "\"alpha_w\": 1.95")
        .replace("\"alpha_n\": 0.7", "\"alpha_n\": 0.75");
    let out = run_with(&dir, &text, &["duopoly"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn constrained_needs_eta() {
    let dir = TempDir::new().unwrap();
    let text = DUO.replace("\"duopoly\"", "\"constrained\"");
    assert_eq!(run_with(&dir, &text, &["constrained"]).status.code(), Some(2));
    let out = run_with(&dir, &text, &["constrained", "--eta", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let o: EquilibriumOutcome = serde_json::from_slice(&out.stdout).unwrap();
    assert!(o.gap().abs() <= 0.01);
}

#[test]
fn check_prints_reports() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, MULTI, &["check"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["B3-proof", "C1", "C3"] {
        assert!(text.contains(id), "{text}");
    }
    let bad = MONO.replace("\"b_b\": 0.5", "\"b_b\": 1.9");
    let out = run_with(&dir, &bad, &["check", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"], "monopoly");
}

#[test]
fn thread_setting_is_validated() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", MONO);
    let out = Command::new(env!("CARGO_BIN_EXE_cspmkt"))
        .args(["monopoly", "--config", &cfg.to_string_lossy()])
        .env("CSPMKT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = run_with(&dir, DUO, &["sweep", "--seed", "5"]);
    let b = run_with(&dir, DUO, &["sweep", "--seed", "5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn in_process_run_matches_binary() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", MONO);
    let dest = dir.path().join("out.json");
    let code = cspmkt_cli::run([
        "cspmkt",
        "monopoly",
        "--config",
        &cfg.to_string_lossy(),
        "--out",
        &dest.to_string_lossy(),
    ]);
    assert_eq!(code, 0);
    let bin = cspmkt(&["monopoly", "--config", &cfg.to_string_lossy()]);
    assert_eq!(std::fs::read(Path::new(&dest)).unwrap(), bin.stdout);
}
