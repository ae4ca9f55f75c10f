use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vnsim::harness::{emit_plot_data, run_with_seed, Experiment, RunConfig};
use vnsim::reduction::RngSeed;

fn vnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnsim"))
        .args(args)
        .env_remove("VN_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn zeno_two_questions_prints_quarter() {
    let o = vnsim(&["zeno", "--hamiltonian", "rabi(1.0)", "--T", "1.5707963267948966", "--n", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "survival: 0.25");
}

#[test]
fn zeno_curve_as_csv() {
    let o = vnsim(&["zeno", "--hamiltonian", "rabi(1.0)", "--T", "1.5707963267948966", "--n", "100,2", "--out", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("n,survival"));
    let values: Vec<(usize, f64)> = rows
        .map(|r| {
            let (n, s) = r.split_once(',').unwrap();
            (n.parse().unwrap(), s.parse().unwrap())
        })
        .collect();
    assert_eq!(values.len(), 2);
    assert_eq!(values[0].0, 100);
    assert!((values[0].1 - 0.9756269141438981).abs() < 1e-12);
    assert!((values[1].1 - 0.25).abs() < 1e-12);
}

#[test]
fn config_file_runs_hardy_lhv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lhv.json", r#"{"experiment":"hardy_lhv","parameters":{}}"#);
    let o = vnsim(&["run", "--config", &cfg]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "consistent_with_p4: 0");
}

#[test]
fn hardy_verify_report_fields() {
    let o = vnsim(&["hardy", "verify", "--out", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["p1_violation", "p2_violation", "p3_violation", "p4_value", "R1", "R2"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["R1"], "CONTRADICTION");
    assert!((v["p4_value"].as_f64().unwrap() - 0.0901699437494742).abs() < 1e-12);
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"experiment":"zeno","parameters":{"T":1,"n":4}}"#);
    let o = vnsim(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "missing_field");
    assert_eq!(v["field"], "parameters.hamiltonian");

    let cfg = write(dir.path(), "unknown.json", r#"{"experiment":"nope","parameters":{}}"#);
    let o = vnsim(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "unknown_experiment");
}

#[test]
fn runtime_errors_exit_one() {
    let o = vnsim(&["hardy", "assert", "--instance", "product", "--which", "R1"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "precondition");
}

#[test]
fn seed_precedence_and_byte_identical_replay() {
    let args = ["attention", "--T", "0.5", "--out", "jsonl"];
    let with_env = |seed: &str, extra: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_vnsim"))
            .args(&all)
            .env("VN_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    let flag = vnsim(&[&args[..], &["--seed", "5"]].concat()).stdout;
    assert_eq!(with_env("5", &[]), flag);
    assert_eq!(with_env("9", &["--seed", "5"]), flag);
    assert_eq!(vnsim(&[&args[..], &["--seed", "5"]].concat()).stdout, flag);
    assert_ne!(with_env("6", &[]), flag);
    for line in String::from_utf8(flag).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["outcome"] == "Y" || v["outcome"] == "N");
    }
}

#[test]
fn attention_writes_occupancy_sibling() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.jsonl");
    let o = vnsim(&["attention", "--T", "0.3", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("mean_occupancy: "));
    assert!(out.exists());
    let occ = std::fs::read_to_string(dir.path().join("trace.occupancy.csv")).unwrap();
    assert!(occ.lines().count() > 10);
}

#[test]
fn emitted_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let o = vnsim(&["dual-task", "--T", "0.5", "--shared-rate", "40", "--seed", "3", "--emit-config", path.to_str().unwrap()]);
    assert!(o.status.success());
    let cfg = RunConfig::from_path(&path).unwrap();
    assert_eq!(cfg.experiment, Experiment::DualTask);
    assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);

    let o = vnsim(&["run", "--config", path.to_str().unwrap(), "--seed", "3"]);
    let direct = run_with_seed(&cfg, RngSeed(3)).unwrap();
    assert_eq!(stdout(&o).trim(), direct.summary);
}

#[test]
fn help_lists_experiments() {
    let text = stdout(&vnsim(&["--help"]));
    for e in Experiment::ALL {
        assert!(text.contains(e.name()), "{} missing from help", e.name());
    }
}

#[test]
fn plot_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot.csv");
    emit_plot_data(&[("t", &[0.0, 0.5]), ("occupancy", &[1.0, 0.25])], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,occupancy\n0,1\n0.5,0.25\n");
}
