use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use gridsim_core::FeederModel;
use serde_json::Value;

fn gridsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gridsim"));
    cmd.args(args).env_remove("GRIDSIM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_prints_defaults() {
    let out = gridsim(&["validate"], &[]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["run"]["scenarios"], 100);
    assert_eq!(v["run"]["penetration_levels"].as_array().unwrap().len(), 7);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"run": {"dt_h": 0.7, "scenarios": 0}}"#).unwrap();
    let out = gridsim(&["validate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("run.dt_h") && err.contains("run.scenarios"),
        "{err}"
    );

    let out = gridsim(
        &[
            "run",
            "--dt",
            "0.7",
            "-o",
            dir.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o/aggregate.csv").exists());
}

#[test]
fn single_scenario_run_is_fast_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let t = Instant::now();
    let out = gridsim(
        &[
            "run",
            "--scenarios",
            "1",
            "--pl",
            "0",
            "-o",
            a.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(t.elapsed().as_secs_f64() < 5.0);
    gridsim(
        &[
            "run",
            "--scenarios",
            "1",
            "--pl",
            "0",
            "-o",
            b.to_str().unwrap(),
        ],
        &[],
    );
    for f in [
        "aggregate.csv",
        "tco_curve.csv",
        "expected_series.csv",
        "summary.json",
    ] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let (_, rows) = table(&read(&a, "aggregate.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn default_levels_give_full_cost_curve_and_manifest_replays() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = gridsim(
        &[
            "run",
            "--scenarios",
            "3",
            "--seed",
            "5",
            "-o",
            first.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let (header, rows) = table(&read(&first, "tco_curve.csv"));
    assert_eq!(header, ["pl", "method", "year", "cost"]);
    assert_eq!(rows.len(), 7 * 2 * 21);

    let manifest = first.join("manifest.json");
    let m: Value = serde_json::from_str(&read(&first, "manifest.json")).unwrap();
    assert_eq!(m["config"]["run"]["seed"], 5);
    assert_eq!(m["seeds"].as_array().unwrap().len(), 7);

    let second = dir.path().join("second");
    let out = gridsim(
        &[
            "run",
            "--config",
            manifest.to_str().unwrap(),
            "-o",
            second.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    for f in [
        "aggregate.csv",
        "tco_curve.csv",
        "expected_series.csv",
        "summary.json",
    ] {
        assert_eq!(read(&first, f), read(&second, f), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    let args = |o: &Path| {
        vec![
            "run".to_string(),
            "--scenarios".into(),
            "4".into(),
            "--pl".into(),
            "0,150,300".into(),
            "-o".into(),
            o.to_str().unwrap().to_string(),
        ]
    };
    let run = |o: &Path, envs: &[(&str, &str)], extra: &[&str]| {
        let mut a = args(o);
        a.extend(extra.iter().map(|s| s.to_string()));
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert!(gridsim(&a, envs).status.success());
    };
    run(&a, &[("GRIDSIM_THREADS", "1")], &[]);
    run(&b, &[("GRIDSIM_THREADS", "3")], &[]);
    run(&c, &[], &["--sequential"]);
    for f in ["aggregate.csv", "tco_curve.csv", "expected_series.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
        assert_eq!(read(&a, f), read(&c, f), "{f}");
    }
    let m: Value = serde_json::from_str(&read(&b, "manifest.json")).unwrap();
    assert_eq!(m["threads"], 3);
}

#[test]
fn aggregate_csv_round_trips_against_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridsim(
        &[
            "run",
            "--scenarios",
            "3",
            "--pl",
            "0,200",
            "-o",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let summary: Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    let (header, rows) = table(&read(dir.path(), "aggregate.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (row, level) in rows.iter().zip(summary["levels"].as_array().unwrap()) {
        let pairs = [
            ("mean_daily_lol", &level["daily_loss_of_life"]["mean"]),
            ("std_daily_lol", &level["daily_loss_of_life"]["std"]),
            (
                "transformer_lifetime_years",
                &level["transformer_lifetime_years"],
            ),
            ("proposed_tco", &level["proposed"]["total"]),
            ("conventional_tco", &level["conventional"]["total"]),
        ];
        for (name, json) in pairs {
            let csv: f64 = row[col(name)].parse().unwrap();
            let exact = json.as_f64().unwrap();
            assert!(
                (csv - exact).abs() <= 1e-9 * exact.abs().max(1e-300),
                "{name}: {csv} vs {exact}"
            );
        }
    }
}

#[test]
fn sweep_uses_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridsim(
        &[
            "sweep",
            "--range",
            "0:100:50",
            "--scenarios",
            "2",
            "-o",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let (_, rows) = table(&read(dir.path(), "aggregate.csv"));
    let pls: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(pls, ["0", "50", "100"]);

    let out = gridsim(
        &[
            "sweep",
            "--range",
            "10:0:5",
            "-o",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn traces_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridsim(
        &[
            "run",
            "--scenarios",
            "1",
            "--pl",
            "100",
            "--traces",
            "-o",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let events = read(&dir.path().join("traces"), "pl100_s0000_events.csv");
    assert!(events.starts_with("vehicle_id,node,day,t_s,dt"));
    assert_eq!(events.lines().count(), 1 + 300);
    let taps = read(&dir.path().join("traces"), "pl100_s0000_taps.csv");
    assert!(taps.starts_with("t,v,h,travel"));
}

#[test]
fn failed_scenarios_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    std::fs::write(
        &cfg,
        r#"{"run": {"solver": {"tolerance": 1e-8, "max_iterations": 1}}}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = gridsim(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--scenarios",
            "1",
            "--pl",
            "300",
            "-o",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario 0"));
    assert!(out_dir.join("FAILED").exists());
}

#[test]
fn exported_feeder_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feeder.json");
    let out = gridsim(&["export-feeder", "-o", path.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let model = FeederModel::from_json_str(&read(dir.path(), "feeder.json")).unwrap();
    assert_eq!(model.node_count(), 13);

    // A config pointing at the exported file runs like the built-in one.
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"feeder": {"path": "feeder.json"}}"#).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(gridsim(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--scenarios",
            "1",
            "--pl",
            "100",
            "-o",
            a.to_str().unwrap()
        ],
        &[]
    )
    .status
    .success());
    assert!(gridsim(
        &[
            "run",
            "--scenarios",
            "1",
            "--pl",
            "100",
            "-o",
            b.to_str().unwrap()
        ],
        &[]
    )
    .status
    .success());
    assert_eq!(read(&a, "aggregate.csv"), read(&b, "aggregate.csv"));
}
