use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rplab::cli::{emit_csv, read_csv, render_csv, Cell, CsvTable};
use serde_json::Value;

fn rplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rplab"))
        .args(args)
        .env_remove("RP_TOOLKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON document")
}

fn dir_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(rplab(&["--help"]).status.code(), Some(0));
    assert_eq!(rplab(&["--version"]).status.code(), Some(0));
    assert_eq!(rplab(&["chessboard", "--help"]).status.code(), Some(0));
}

#[test]
fn exit_codes_follow_the_error_class() {
    assert_eq!(rplab(&["oracle"]).status.code(), Some(0));
    assert_eq!(rplab(&["bogus"]).status.code(), Some(1));
    assert_eq!(rplab(&["kernel", "--side", "5"]).status.code(), Some(1));
    assert_eq!(rplab(&["gradient", "--kappa-d", "-2"]).status.code(), Some(1));
    assert_eq!(rplab(&["--threads", "0", "oracle"]).status.code(), Some(1));
    // a failed certificate
    assert_eq!(
        rplab(&["chessboard", "--beta", "1", "--kappa", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        rplab(&["mc-irb", "--side", "4", "--sweeps", "400", "--corrupt"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn document_shape() {
    let out = rplab(&["--seed", "11", "chessboard"]);
    assert!(out.status.success());
    let doc = json_of(&out);
    assert_eq!(doc["tool"], "rplab");
    assert_eq!(doc["subcommand"], "chessboard");
    assert_eq!(doc["seed"], 11);
    assert_eq!(doc["config"]["beta"], 100.0);
    assert_eq!(doc["result"]["verdict"], "PASS");
    assert!(doc["config"].get("threads").is_none());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"kappa_o": 4.0, "kappa_d": 2.0, "seed": 3}"#).unwrap();
    let out = rplab(&[
        "--config",
        dir_str(&cfg),
        "gradient",
        "--kappa-o",
        "8",
        "--points",
        "64",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json_of(&out);
    assert_eq!(doc["config"]["kappa_o"], 8.0);
    assert_eq!(doc["config"]["kappa_d"], 2.0);
    assert_eq!(doc["seed"], 3);

    fs::write(&cfg, r#"{"kappa_oo": 4.0}"#).unwrap();
    assert_eq!(rplab(&["--config", dir_str(&cfg), "gradient"]).status.code(), Some(1));
    fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(rplab(&["--config", dir_str(&cfg), "gradient"]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        rplab(&["--config", dir_str(&missing), "gradient"]).status.code(),
        Some(1)
    );
}

#[test]
fn outputs_are_write_once_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let args = [
        "--quiet",
        "--out-dir",
        dir_str(&out_dir),
        "kernel",
        "--dim",
        "2",
        "--side",
        "4",
    ];
    let out = rplab(&args);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(out_dir.join("kernel.csv")).unwrap();
    assert!(text.starts_with("# tool=rplab"));
    assert!(text.contains("# seed=0\n"));
    let (header, rows) = read_csv(&out_dir.join("kernel.csv")).unwrap();
    assert_eq!(header, ["index", "displacement", "coupling", "mode", "one_minus_hat"]);
    assert_eq!(rows.len(), 16);
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-15);
    assert!(out_dir.join("kernel.json").exists());
    // the second run must not clobber the first
    assert_eq!(rplab(&args).status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(threads);
        let out = Command::new(env!("CARGO_BIN_EXE_rplab"))
            .args(["--quiet", "--seed", "5", "--out-dir", dir_str(&out_dir)])
            .args(["mc-irb", "--model", "potts", "--side", "4", "--sweeps", "300"])
            .env("RP_TOOLKIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push((
            fs::read(out_dir.join("mc-irb.json")).unwrap(),
            fs::read(out_dir.join("mc-irb.csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn seeds_change_monte_carlo_output() {
    let a = json_of(&rplab(&["--seed", "1", "mc-irb", "--side", "4", "--sweeps", "300"]));
    let b = json_of(&rplab(&["--seed", "2", "mc-irb", "--side", "4", "--sweeps", "300"]));
    assert_ne!(a["result"], b["result"]);
}

#[test]
fn meanfield_outputs_carry_both_normalizations() {
    for task in ["solve", "transition", "profile"] {
        let out = rplab(&["meanfield", "--task", task, "--model", "potts", "--q", "4"]);
        assert!(out.status.success(), "{task}");
        let n = &json_of(&out)["result"]["normalization"];
        let (dot, delta) = (n["beta_dot"].as_f64().unwrap(), n["beta_delta"].as_f64().unwrap());
        assert!((dot - 0.75 * delta).abs() < 1e-12, "{task}");
    }
}

#[test]
fn walk_reports_divergence_in_two_dimensions() {
    let doc = json_of(&rplab(&["walk", "--dim", "2"]));
    assert_eq!(doc["result"]["transient"], false);
    assert!(doc["result"]["integral"].is_null());
    let doc = json_of(&rplab(&["walk", "--dim", "3"]));
    assert!((doc["result"]["i_d"].as_f64().unwrap() - 0.516386).abs() < 1e-5);
}

#[test]
fn empty_table_round_trips_as_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let table = CsvTable::new(&["side", "value"]);
    emit_csv(&path, &table, &[("seed".into(), "0".into())]).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "# seed=0\nside,value\n");
    let (header, rows) = read_csv(&path).unwrap();
    assert_eq!(header, ["side", "value"]);
    assert!(rows.is_empty());
}

#[test]
fn floats_survive_the_csv_round_trip() {
    let values = [1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0];
    let mut table = CsvTable::new(&["v"]);
    for v in values {
        table.push(vec![Cell::Float(v)]);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    fs::write(&path, render_csv(&table, &[]).unwrap()).unwrap();
    let (_, rows) = read_csv(&path).unwrap();
    for (row, v) in rows.iter().zip(values) {
        assert_eq!(row[0].parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
