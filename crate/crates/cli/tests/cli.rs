use std::path::Path;
use std::process::Command;

use rmf_cli::{config_from_header, ExperimentConfig};

fn rmf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rmf")).args(args).output().unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(text: &str, name: &str) -> usize {
    text.lines().nth(1).unwrap().split(',').position(|c| c == name).unwrap()
}

#[test]
fn ballot_smoke() {
    let out = rmf(&["ballot", "--a", "2", "--n", "10000", "--trials", "100000", "--seed", "42"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# config: {"));
    assert_eq!(text.lines().nth(1).unwrap(), "a,n,c,trials,p_hat,stderr,normalized");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let p: f64 = rows[0][column(&text, "p_hat")].parse().unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn char_avg_writes_file_with_expected_average() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chars.csv");
    let out = rmf(&["char-avg", "--r", "7", "--x", "2", "--y", "3", "--q", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let avg: f64 = data_rows(&text)[0][column(&text, "average")].parse().unwrap();
    assert!((avg - 3.0).abs() <= 1e-9);
    // nothing but the output is left in the directory
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unknown_flag_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.csv");
    let out = rmf(&["char-avg", "--r", "7", "--x", "2", "--y", "3", "--bogus", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&path).exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn exit_codes_for_core_errors() {
    assert_eq!(rmf(&["char-avg", "--r", "9", "--x", "1", "--y", "2"]).status.code(), Some(2));
    assert_eq!(rmf(&["primes", "--limit", "1"]).status.code(), Some(3));
}

#[test]
fn header_reparses_to_the_same_config() {
    let out = rmf(&["moment-scan", "--x", "20000", "--theta", "0.5,1", "--trials", "50", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let config = config_from_header(&text).unwrap();
    let again = serde_json::to_string(&config).unwrap();
    let reparsed: ExperimentConfig = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, config);
    assert_eq!(config.seed, 7);
    assert_eq!(data_rows(&text).len(), 2);
}

#[test]
fn output_bytes_do_not_depend_on_threads() {
    let args = ["euler-check", "--p-lo", "100", "--p-hi", "1000", "--t", "0.7", "--trials", "500", "--seed", "3"];
    let one = rmf(&[&args[..], &["--threads", "1"]].concat());
    let four = rmf(&[&args[..], &["--threads", "4"]].concat());
    let strip = |o: &std::process::Output| data_rows(&String::from_utf8_lossy(&o.stdout));
    assert!(one.status.success());
    assert_eq!(strip(&one), strip(&four));
}

#[test]
fn json_format() {
    let out = rmf(&["parseval", "--n", "20", "--sigma", "0.5", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["columns"][0], "n_coeffs");
    let gap = doc["rows"][0][4].as_f64().unwrap();
    assert!(gap <= 1e-6);
    assert_eq!(doc["config"]["command"]["subcommand"], "parseval");
}

#[test]
fn primes_and_factorizations() {
    let out = rmf(&["primes", "--limit", "30"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let primes: Vec<String> = data_rows(&text).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(primes, ["2", "3", "5", "7", "11", "13", "17", "19", "23", "29"]);
    let out = rmf(&["primes", "--x", "10", "--y", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "n,prime,exponent");
    assert_eq!(data_rows(&text), [["11", "11", "1"], ["12", "2", "2"], ["12", "3", "1"]]);
}
