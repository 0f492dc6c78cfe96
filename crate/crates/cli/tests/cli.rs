use std::path::Path;
use std::process::{Command, Output};

fn impactsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impactsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(impactsim(&[]).status.code(), Some(1));
    assert_eq!(impactsim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(impactsim(&["simulate"]).status.code(), Some(1));
    assert_eq!(impactsim(&["analyze", "impact", "x.csv", "--window", "soon"]).status.code(), Some(1));
    assert_eq!(impactsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nsession_seconds = 10.0\nsurprise = true\n").unwrap();
    let out = impactsim(&["simulate", cfg.to_str().unwrap(), "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("run").exists());
    assert_eq!(impactsim(&["simulate", "--preset", "nope"]).status.code(), Some(2));
}

#[test]
fn missing_data_exits_three() {
    let out = impactsim(&["analyze", "acf", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_replay_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();
    let out = impactsim(&["simulate", "--preset", "santa-fe", "--session", "300s", "--seed", "4", "--out", run_s]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trades.csv", "l1.csv", "summary.txt", "config.toml"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let trades: usize = value(&stdout(&out), "trades").unwrap().parse().unwrap();
    assert!(trades > 1000);

    // Refuses to overwrite.
    let again = impactsim(&["simulate", "--preset", "santa-fe", "--session", "300s", "--out", run_s]);
    assert_ne!(again.status.code(), Some(0));

    let replayed = impactsim(&["replay", run_s]);
    assert!(replayed.status.success());
    assert_eq!(value(&stdout(&replayed), "trades_identical"), Some("true"));
    assert_eq!(value(&stdout(&replayed), "l1_identical"), Some("true"));

    let acf = impactsim(&["analyze", "acf", run_s, "--max-lag", "20"]);
    assert!(acf.status.success(), "{}", String::from_utf8_lossy(&acf.stderr));
    assert!(run.join("analysis-acf/acf.csv").is_file());

    let impact_dir = dir.path().join("impact");
    let impact = impactsim(&[
        "analyze",
        "impact",
        run.join("trades.csv").to_str().unwrap(),
        run.join("l1.csv").to_str().unwrap(),
        "--window",
        "1s",
        "--horizon",
        "30s",
        "--out",
        impact_dir.to_str().unwrap(),
    ]);
    assert!(impact.status.success(), "{}", String::from_utf8_lossy(&impact.stderr));
    let delta: f64 = value(&stdout(&impact), "delta").unwrap().parse().unwrap();
    assert!(delta > 0.0);
    for f in ["windows.csv", "buckets.csv", "delta_fit.csv", "split.csv", "summary.txt"] {
        assert!(impact_dir.join(f).is_file(), "missing {f}");
    }

    let decay = impactsim(&["analyze", "decay", run_s, "--window", "1s", "--horizon", "30s", "--max-lag", "5", "--delta", "0.6"]);
    assert!(decay.status.success(), "{}", String::from_utf8_lossy(&decay.stderr));
    assert_eq!(value(&stdout(&decay), "delta"), Some("0.6"));
}

#[test]
fn impact_without_quotes_or_enough_windows_fails() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();
    assert!(impactsim(&["simulate", "--preset", "santa-fe", "--session", "60", "--out", run_s]).status.success());
    let trades = run.join("trades.csv");
    let no_quotes = impactsim(&["analyze", "impact", trades.to_str().unwrap()]);
    assert_ne!(no_quotes.status.code(), Some(0));
    // One minute of data cannot fill an hour of trailing windows.
    let short = impactsim(&["analyze", "impact", run_s]);
    assert_eq!(short.status.code(), Some(4), "{}", String::from_utf8_lossy(&short.stderr));
    assert!(!Path::new(run_s).join("analysis-impact").exists());
}

#[test]
fn tune_dar_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("tune");
    let out = impactsim(&[
        "tune-dar",
        "--target-alpha",
        "0.5",
        "--target-c",
        "0.3",
        "--budget",
        "3",
        "--stream-len",
        "20000",
        "--max-lag",
        "20",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let p: f64 = value(&text, "p").unwrap().parse().unwrap();
    assert!((0.5..=0.99).contains(&p));
    assert!(out_dir.join("tune.csv").is_file());
    let bad = impactsim(&["tune-dar", "--target-alpha=-1", "--target-c", "0.3"]);
    assert_eq!(bad.status.code(), Some(4));
}
