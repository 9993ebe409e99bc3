use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fpplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpplab")).args(args).output().expect("binary runs")
}

fn record(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON record")
}

fn path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn parity_example_is_exactly_one_half() {
    let r = record(&fpplab(&["condsum.parity", "--L", "3", "--p", "1/2", "--n", "50"]));
    assert_eq!(r["payload"]["prob_first_is_one"], serde_json::json!(["1/2"]));
    assert_eq!(r["config"]["subcommand"], "condsum.parity");
}

#[test]
fn partition_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(&dir, "q.csv");
    let r = record(&fpplab(&["partition.q", "--Lmax", "10", "--csv", &csv]));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("L,q,Q"));
    assert_eq!(text.lines().last(), Some("10,10,43"));
    assert_eq!(r["payload"]["q"][10], "10");
}

#[test]
fn invalid_key_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(&dir, "bad.toml");
    fs::write(&cfg, "[params]\nLmax = 5\nLmx = 6\n").unwrap();
    let out = path(&dir, "o.jsonl");
    let res = fpplab(&["partition.q", "--config", &cfg, "--out", &out]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!Path::new(&out).exists());

    fs::write(&cfg, "sed = 4\n").unwrap();
    assert_eq!(fpplab(&["partition.q", "--Lmax", "3", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(fpplab(&["partition.q", "--Lmx", "3"]).status.code(), Some(2));
    assert_eq!(fpplab(&["condsum.parity", "--L", "3"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flags_merge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(&dir, "c.toml");
    fs::write(&cfg, "subcommand = \"condsum.parity\"\nseed = 9\n[params]\nL = 3\np = \"1/3\"\nn = [5, 6]\n").unwrap();
    let r = record(&fpplab(&["condsum.parity", "--config", &cfg, "--p", "1/2"]));
    assert_eq!(r["config"]["params"]["p"], "1/2");
    assert_eq!(r["config"]["params"]["L"], "3");
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["payload"]["prob_first_is_one"].as_array().unwrap().len(), 2);
    let wrong = fpplab(&["partition.q", "--config", &cfg, "--Lmax", "3"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn runtime_error_codes() {
    let rare = fpplab(&["iic.estimate", "--event", "true", "--n", "64", "--L", "0", "--samples", "20"]);
    assert_eq!(rare.status.code(), Some(3), "{}", String::from_utf8_lossy(&rare.stderr));
    let grid = Command::new(env!("CARGO_BIN_EXE_fpplab"))
        .args(["condsum.law", "--model", "parity:1/2", "--n", "10", "--L", "50"])
        .env("FPPLAB_STATE_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(grid.status.code(), Some(4), "{}", String::from_utf8_lossy(&grid.stderr));
}

#[test]
fn replay_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "r.jsonl");
    let run = fpplab(&["perc.crossing", "--n", "6", "--samples", "500", "--seed", "4", "--workers", "1", "--out", &out]);
    assert!(run.status.success());
    let stored: Value = serde_json::from_str(fs::read_to_string(&out).unwrap().trim()).unwrap();
    let again = record(&fpplab(&["replay", "--record", &out, "--workers", "3"]));
    assert_eq!(
        serde_json::to_string(&stored["payload"]).unwrap(),
        serde_json::to_string(&again["payload"]).unwrap()
    );
    assert_eq!(stored["checksum"], again["checksum"]);
}

fn rewrite(out: &str, edit: impl Fn(&mut Value), reseal: bool) {
    let mut rec: Value = serde_json::from_str(fs::read_to_string(out).unwrap().trim()).unwrap();
    edit(&mut rec);
    if reseal {
        let body = serde_json::json!({
            "version": rec["version"],
            "config": rec["config"],
            "seed_schedule": rec["seed_schedule"],
            "payload": rec["payload"],
        });
        rec["checksum"] = format!("{:x}", Sha256::digest(serde_json::to_vec(&body).unwrap())).into();
    }
    fs::write(out, serde_json::to_string(&rec).unwrap()).unwrap();
}

#[test]
fn replay_refuses_tampering_and_other_versions() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "r.jsonl");
    assert!(fpplab(&["partition.q", "--Lmax", "12", "--out", &out]).status.success());
    // The checksum is recomputed the same way the binary does it.
    rewrite(&out, |_| {}, true);
    assert!(fpplab(&["replay", "--record", &out]).status.success());

    rewrite(&out, |r| r["config"]["params"]["Lmax"] = 13.into(), false);
    let res = fpplab(&["replay", "--record", &out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("checksum"));

    rewrite(&out, |r| r["payload"]["q"][3] = "3".into(), true);
    let res = fpplab(&["replay", "--record", &out]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("differs"));

    rewrite(&out, |r| r["version"] = "fpplab 0.0.1".into(), true);
    let res = fpplab(&["replay", "--record", &out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("refusing"));
}

#[test]
fn every_subcommand_runs() {
    let cases: &[&[&str]] = &[
        &["fpp.sim", "--n", "8", "--samples", "20"],
        &["fpp.decompose", "--n", "16", "--samples", "5"],
        &["iic.estimate", "--event", "edge(0,0,E) == 0", "--n", "4", "--L", "inf", "--samples", "200"],
        &["iic.sample", "--n", "4", "--samples", "3"],
        &["perc.crossing", "--shape", "square", "--n", "4", "--samples", "100"],
        &["perc.corrlen", "--p", "0.9", "--nmax", "4", "--samples", "100"],
        &["perc.fourarm", "--radius", "3", "--samples", "100"],
        &["perc.ok-event", "--samples", "200", "--configs", "2"],
        &["condsum.law", "--model", "iid:0:1/2,1:1/2", "--n", "4", "--L", "2", "--j", "2"],
        &["condsum.bound", "--model", "partition:1/2", "--n", "8", "--L", "3", "--delta", "1", "--delta-prime", "1"],
        &["condsum.general-parity", "--x1", "0:1/2,1:1/2", "--tail", "0:1/2,2:1/2", "--L", "3", "--delta", "1/2", "--n", "5,10"],
        &["condsum.oscillate", "--rblocks", "2,4,8", "--L", "1", "--n", "3,6,9"],
        &["partition.criteria", "--alpha", "factorial", "--N", "12"],
    ];
    for args in cases {
        let r = record(&fpplab(args));
        assert_eq!(r["config"]["subcommand"], args[0]);
        assert!(r["payload"].is_object(), "{args:?}");
    }
}
