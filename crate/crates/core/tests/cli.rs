use std::fs;
use std::path::Path;

use budget_pacing::cli::run;

fn pacer(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("pacer").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SIM: &[&str] = &[
    "simulate",
    "--budget",
    "50000",
    "--periods",
    "1000",
    "--cost",
    "min(1*b^0.5,100)",
];

#[test]
fn simulate_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SIM.to_vec();
    args.extend(["--out", dir.path().to_str().unwrap()]);
    let (code, _, err) = pacer(&args);
    assert_eq!(code, 0, "{err}");
    let csv = String::from_utf8(read(dir.path(), "trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,bid,cost,alpha,remaining,multiplier,status"));
    assert_eq!(csv.lines().count(), 1001);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path(), "spend_report.json")).unwrap();
    let leftover = report["leftover_fraction"].as_f64().unwrap();
    assert!((leftover - 0.001).abs() < 0.0002, "{leftover}");
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, _, err) = pacer(&["replay", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    for name in ["trajectory.csv", "spend_report.json", "auctions.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let (_, first, _) = pacer(SIM);
    let (_, second, _) = pacer(SIM);
    assert_eq!(first, second);
}

#[test]
fn exit_codes() {
    let (code, _, err) = pacer(&["simulate", "--budget", "100", "--periods", "10", "--cost", "b^^2"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("error"));

    let (code, _, _) = pacer(&["simulate", "--budget", "-5", "--periods", "10", "--cost", "b^1"]);
    assert_eq!(code, 2);

    let (code, _, err) = pacer(&[
        "analyze",
        "--budget",
        "50000",
        "--periods",
        "1000",
        "--cost",
        "min(b^2.5,100)",
        "--only",
        "bound",
    ]);
    assert_eq!(code, 3, "{err}");

    let (code, out, err) = pacer(&[
        "analyze",
        "--budget",
        "50000",
        "--periods",
        "1000",
        "--cost",
        "b^0.5",
        "--only",
        "bound",
    ]);
    assert_eq!(code, 0, "{err}");
    let bound: f64 = out.trim().parse().unwrap();
    assert!((bound - 31.2).abs() < 0.1, "{bound}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("campaign.json");
    fs::write(
        &path,
        r#"{"budget": 1000, "periods": 20, "cost": "2*b^1", "schedule": {"variant": "uniform"}}"#,
    )
    .unwrap();
    let (code, out, err) = pacer(&["simulate", "--config", path.to_str().unwrap(), "--periods", "10"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| !l.starts_with('t')).count(), 10);

    fs::write(&path, r#"{"budget": 1000, "periods": 20, "bogus": 1}"#).unwrap();
    let (code, _, err) = pacer(&["simulate", "--config", path.to_str().unwrap(), "--cost", "b^1"]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn generated_log_replays_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _, err) = pacer(&["gen-log", "--seed", "3", "--periods", "24", "--out", d]);
    assert_eq!(code, 0, "{err}");
    let log = dir.path().join("bid_log.csv");
    let (code, _, err) = pacer(&["replay", "--log", log.to_str().unwrap(), "--out", d, "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let traj: serde_json::Value = serde_json::from_slice(&read(dir.path(), "trajectory.json")).unwrap();
    assert_eq!(traj["periods"], 24);
}

#[test]
fn malformed_log_rows_are_reported_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.csv");
    fs::write(&log, "period,impression,bid\n0,1,2.5\n0,2,abc\n1,3,-1\n").unwrap();
    let (code, _, err) = pacer(&["replay", "--log", log.to_str().unwrap(), "--budget", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains(".csv:3:") && err.contains(".csv:4:"), "{err}");

    let (code, _, err) = pacer(&[
        "replay",
        "--log",
        log.to_str().unwrap(),
        "--budget",
        "10",
        "--fail-fast",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && !err.contains("line 4"), "{err}");
}

#[test]
fn sweep_splits_into_two_bands_past_two() {
    let (code, out, err) = pacer(&["sweep", "--budget", "50000", "--periods", "1000", "--k", "1.5:2.3:0.4"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let bands: Vec<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(bands, ["1", "1", "2"]);
}
