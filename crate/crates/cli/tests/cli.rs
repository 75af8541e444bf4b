use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloudlet-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

const SMALL: [&str; 5] = ["num_ues=60", "num_slots=6", "rows=3", "cols=3", "capacity=10"];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    let mut v = head.to_vec();
    v.push("--override");
    v.extend_from_slice(&SMALL);
    v
}

#[test]
fn run_writes_outputs_and_single_static_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = sim(&[
        "run",
        "--out",
        out,
        "--override",
        "num_ues=10",
        "num_slots=1",
        "strategy=static",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let per_slot = read(dir.path(), "per_slot.csv");
    let lines: Vec<&str> = per_slot.lines().collect();
    assert_eq!(
        lines[0],
        "slot,strategy,alpha,total_gain_ms,total_cost,total_profit,num_migrations,sum_migration_time_s,mean_rtt_ms"
    );
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').nth(6), Some("0"));
    assert!(read(dir.path(), "summary.csv")
        .starts_with("strategy,alpha,avg_profit_per_slot,avg_rtt_ms,avg_migrations_per_slot,avg_migration_time_s\n"));
    let effective = read(dir.path(), "config_effective.txt");
    assert!(effective.contains("seed = 2015") && effective.contains("num_ues = 10"));
}

#[test]
fn rerun_is_byte_identical_and_reproducible_from_effective_config() {
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    for d in [&a, &b] {
        let o = sim(&with_small(&[
            "run",
            "--seed",
            "7",
            "--out",
            d.path().to_str().unwrap(),
        ]));
        assert!(o.status.success());
    }
    let effective = a.path().join("config_effective.txt");
    let o = sim(&[
        "run",
        "--config",
        effective.to_str().unwrap(),
        "--out",
        c.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for name in ["per_slot.csv", "summary.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name));
        assert_eq!(read(a.path(), name), read(c.path(), name));
    }
    assert!(read(a.path(), "config_effective.txt").contains("seed = 7"));
}

#[test]
fn sweep_writes_profit_diff() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = sim(&with_small(&[
        "sweep",
        "--out",
        out,
        "--alphas",
        "0,5,10",
        "--strategies",
        "primal,far,static",
    ]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(dir.path(), "summary.csv");
    assert_eq!(summary.lines().count(), 1 + 9);
    let primal: Vec<f64> = summary
        .lines()
        .filter(|l| l.starts_with("primal,"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(primal.windows(2).all(|w| w[1] <= w[0]), "{primal:?}");
    let diff = read(dir.path(), "profit_diff.csv");
    let mut rows = diff.lines();
    assert_eq!(rows.next(), Some("alpha,primal_minus_far,primal_minus_static"));
    for row in rows {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1] >= -1e-6, "{row}");
    }
}

#[test]
fn compare_runs_three_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(&with_small(&["compare", "--out", dir.path().to_str().unwrap()]));
    assert!(o.status.success());
    let summary = read(dir.path(), "summary.csv");
    let names: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["primal", "far", "static"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // Usage errors.
    assert_eq!(sim(&["sweep", "--out", out, "--alphas", ""]).status.code(), Some(2));
    assert_eq!(sim(&["sweep", "--out", out]).status.code(), Some(2));
    assert_eq!(sim(&["frobnicate"]).status.code(), Some(2));
    // Unwritable output path: a regular file where a directory is needed.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("out");
    assert_eq!(sim(&["run", "--out", nested.to_str().unwrap()]).status.code(), Some(2));
    // Invalid configuration.
    assert_eq!(
        sim(&["run", "--out", out, "--override", "num_ues=2000"]).status.code(),
        Some(1)
    );
    assert_eq!(
        sim(&["run", "--out", out, "--override", "bogus=1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        sim(&["run", "--out", out, "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn validate_reports_table_and_status() {
    let ok = sim(&["validate"]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("pass  capacity"));

    let cap = sim(&["validate", "--override", "num_ues=2000"]);
    assert_eq!(cap.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&cap.stdout).contains("insufficient_capacity"));

    let div = sim(&["validate", "--override", "r_mbps=1"]);
    assert_eq!(div.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&div.stdout).contains("divergent_migration risk"));
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let o = sim(&["validate", "--config", path]);
    assert!(o.status.success());
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let with_file = sim(&[
        "run",
        "--config",
        path,
        "--out",
        a.path().to_str().unwrap(),
        "--override",
        "num_slots=1",
    ]);
    let builtin = sim(&["run", "--out", b.path().to_str().unwrap(), "--override", "num_slots=1"]);
    assert!(with_file.status.success() && builtin.status.success());
    assert_eq!(
        read(a.path(), "config_effective.txt"),
        read(b.path(), "config_effective.txt")
    );
}
