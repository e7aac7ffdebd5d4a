use std::process::{Command, Output};

use damctl_cli::commands::{AnalyzeReport, SimulateOutput};
use damctl_core::{ControlSolution, CostRegime};
use serde_json::Value;

fn damctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_damctl"))
        .args(args)
        .env_remove("DAMCTL_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const MM1: [&str; 8] = ["--lambda", "1", "--b1", "exp:1.25", "--b2", "exp:2", "--level", "5"];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&MM1);
    v.extend_from_slice(extra);
    v
}

#[test]
fn analyze_reports_the_worked_example() {
    let r: AnalyzeReport = serde_json::from_str(&stdout(&damctl(&with("analyze", &["--j1", "5", "--j2", "5"])))).unwrap();
    assert!((r.p1 - 0.237_329).abs() < 1e-6);
    assert!((r.p2 - 0.062_214_3).abs() < 1e-6);
    // The cost is scaled by the level.
    assert!((r.cost.unwrap() - 5.0 * 5.0 * (r.p1 + r.p2)).abs() < 1e-9);
    assert_eq!(r.level, 5);
}

#[test]
fn level_one_count_is_reciprocal_r0() {
    // For exponential b1 at unit load, r0 = 1/2.
    let r: AnalyzeReport =
        serde_json::from_str(&stdout(&damctl(&["analyze", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:2", "--level", "1"])))
            .unwrap();
    assert_eq!(r.q_level, Some(2.0));
    assert!(r.cost.is_none());
}

#[test]
fn text_and_json_carry_the_same_numbers() {
    let json: Value = serde_json::from_str(&stdout(&damctl(&with("analyze", &[])))).unwrap();
    let text = stdout(&damctl(&with("analyze", &["--format", "text"])));
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let (key, value) = (parts.next().unwrap(), parts.next().unwrap());
        assert_eq!(json[key].to_string(), value, "{key}");
    }
}

#[test]
fn missing_field_is_a_config_error() {
    let out = damctl(&["analyze", "--lambda", "1", "--b1", "exp:1", "--level", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b2"));
}

#[test]
fn bad_values_are_config_errors() {
    for args in [
        vec!["analyze", "--lambda", "-1", "--b1", "exp:1", "--b2", "exp:2", "--level", "5"],
        vec!["analyze", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:0.5", "--level", "5"],
        vec!["analyze", "--lambda", "1", "--b1", "nope:1", "--b2", "exp:2", "--level", "5"],
        vec!["sweep", "--j1", "1", "--j2", "1", "--rho12", "2", "--rho2", "0.5", "--c-values", ""],
        vec!["verify", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:2"],
    ] {
        assert_eq!(damctl(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn underflowing_weights_are_numeric_errors() {
    let out = damctl(&["analyze", "--lambda", "1", "--b1", "det:800", "--b2", "exp:2", "--level", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"model": {"lambda": 1, "b1": "exp:1.25", "b2": "exp:2", "level": 5}, "costs": {"j1": 1, "j2": 1}}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let base: AnalyzeReport = serde_json::from_str(&stdout(&damctl(&["analyze", "--config", cfg]))).unwrap();
    let flags: AnalyzeReport = serde_json::from_str(&stdout(&damctl(&with("analyze", &["--j1", "1", "--j2", "1"])))).unwrap();
    assert_eq!(base, flags);
    let over: AnalyzeReport = serde_json::from_str(&stdout(&damctl(&["analyze", "--config", cfg, "--level", "7"]))).unwrap();
    assert_eq!(over.level, 7);

    std::fs::write(&path, r#"{"model": {"lambda": 1}, "colour": "red"}"#).unwrap();
    assert_eq!(damctl(&["analyze", "--config", cfg]).status.code(), Some(2));
}

#[test]
fn precision_environment_variable() {
    let args = ["analyze", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:2", "--level", "200"];
    let run = |env: &str| {
        Command::new(env!("CARGO_BIN_EXE_damctl")).args(args).env("DAMCTL_PRECISION", env).output().unwrap()
    };
    let extended: AnalyzeReport = serde_json::from_str(&stdout(&run("60"))).unwrap();
    let double: AnalyzeReport = serde_json::from_str(&stdout(&run("double"))).unwrap();
    assert_eq!(extended.q_level, Some(201.0));
    assert!((extended.p1 - double.p1).abs() < 1e-12);
    assert_eq!(run("many").status.code(), Some(2));
}

#[test]
fn optimize_balanced_is_critical() {
    let out = stdout(&damctl(&with("optimize", &["--j1", "1", "--j2", "1"])));
    let s: ControlSolution = serde_json::from_str(&out).unwrap();
    assert_eq!(s.regime, CostRegime::Critical);
    assert_eq!(s.c_star, 0.0);
    assert_eq!(s.rho1_star, 1.0);
}

#[test]
fn optimize_exact_near_critical_load() {
    let args = ["optimize", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:2", "--level", "100", "--j1", "1", "--j2", "1", "--mode", "exact"];
    let s: ControlSolution = serde_json::from_str(&stdout(&damctl(&args))).unwrap();
    assert!((s.rho1_star - 1.0).abs() <= 20.0 / 100.0);
}

#[test]
fn simulate_is_reproducible_and_round_trips() {
    let args = with("simulate", &["--seed", "7", "--cycles", "20000"]);
    let a = stdout(&damctl(&args));
    let b = stdout(&damctl(&args));
    assert_eq!(a, b);
    let parsed: SimulateOutput = serde_json::from_str(&a).unwrap();
    assert_eq!(parsed.report.seed, 7);
    assert_eq!(parsed.report.cycles, 20_000);
    let exact = parsed.exact.unwrap();
    assert!((parsed.report.p1_hat - exact.p1).abs() <= 3.0 * parsed.report.half_widths.p1);
}

#[test]
fn verify_writes_a_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let out = damctl(&[
        "verify", "--lambda", "1", "--b1", "exp:1", "--b2", "exp:2", "--regime", "heavy_upper", "--levels", "100,200",
        "--c-values", "1", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("heavy_upper C=1"));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["L", "delta", "C", "p1_exact", "p1_asym", "p1_rel_err", "p2_exact", "p2_asym", "p2_rel_err"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][0], "200");
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.005);
}

#[test]
fn sweep_starts_at_the_critical_cost() {
    let out = stdout(&damctl(&["sweep", "--j1", "1", "--j2", "1", "--rho12", "2", "--rho2", "0.5", "--c-values", "0,1"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("C,J_upper,J_lower"));
    assert_eq!(lines.next(), Some("0.0,2.0,2.0"));
    assert_eq!(lines.count(), 1);
}
