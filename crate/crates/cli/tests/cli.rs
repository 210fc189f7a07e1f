use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn infmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infmax")).args(args).output().expect("binary runs")
}

fn infmax_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infmax")).args(args).env(key, val).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Parses the single data row printed by `solve`.
fn record(stdout: &str) -> Vec<String> {
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "model,k,p1,p2,sigma,seed,E_orig,E_noise,err,recovered,wall_ms");
    lines[1].split(',').map(String::from).collect()
}

#[test]
fn noiseless_lp_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&infmax(&["gen", "noiseless", "--k", "2", "--n", "3,4", "--r", "1,1", "--seed", "7", "--out", p(&inst)]));
    let sol = dir.path().join("sol.json");
    let row = record(&ok(&infmax(&["solve", "--instance", p(&inst), "--out", p(&sol)])));
    assert_eq!((row[0].as_str(), row[8].as_str(), row[9].as_str()), ("lp", "0", "true"));

    let dump: Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    for key in ["x", "t", "lambda", "mu", "nu", "xi_dual", "objective", "status", "iterations"] {
        assert!(dump.get(key).is_some(), "dump lacks {key}");
    }
    let verdict: Value =
        serde_json::from_str(&ok(&infmax(&["certify", "--instance", p(&inst), "--solution", p(&sol)]))).unwrap();
    assert_eq!(verdict["verdict"], "integer-optimal by LP");

    let out = infmax(&["certify", "--instance", p(&inst), "--solution", p(&sol), "--model", "cascade"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let bad = infmax(&[
        "gen", "random-planted", "--k", "2", "--n", "10,10", "--r", "5,10", "--q", "0.5", "--s", "0.2", "--out",
        p(&out),
    ]);
    assert_eq!(code(&bad), 0, "s·r_min/r_l = 0.2 is a valid probability");
    let bad = infmax(&[
        "gen", "random-planted", "--k", "2", "--n", "10,10", "--r", "1,10", "--q", "0.5", "--s", "20", "--out",
        p(&out),
    ]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("exceeds 1"));
    assert_eq!(code(&infmax(&["solve", "--model", "nonsense", "--instance", "x"])), 2);
    assert_ne!(code(&infmax(&["solve", "--instance", p(&dir.path().join("missing"))])), 0);
}

#[test]
fn cascade_tie_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("tie");
    ok(&infmax(&["gen", "nested-pair", "--n1", "10", "--n2", "10", "--m1", "10", "--m2", "10", "--out", p(&inst)]));
    let out = infmax(&["solve", "--instance", p(&inst), "--model", "cascade", "--p", "0.5"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ambiguous"));
}

#[test]
fn cascade_threshold_recovery_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("clean");
    ok(&infmax(&["gen", "noiseless", "--k", "3", "--n", "20,25,30", "--r", "3,3,3", "--seed", "2", "--out", p(&inst)]));
    let sol = dir.path().join("sol.json");
    let row = record(&ok(&infmax(&[
        "solve", "--instance", p(&inst), "--model", "cascade", "--rounding", "threshold", "--xi", "0", "--out",
        p(&sol),
    ])));
    assert_eq!(row[9], "true");
    let v: Value =
        serde_json::from_str(&ok(&infmax(&["certify", "--instance", p(&inst), "--solution", p(&sol)]))).unwrap();
    assert_eq!(v["verdict"], "CertifiedOptimal");

    let out = infmax(&["solve", "--instance", p(&inst), "--model", "cascade", "--rounding", "threshold", "--xi", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn biased_dump_on_first_counterexample_is_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("np");
    ok(&infmax(&["gen", "nested-pair", "--n1", "100", "--n2", "20", "--m1", "99", "--m2", "10", "--out", p(&inst)]));
    let sol = dir.path().join("biased.json");
    std::fs::write(&sol, r#"{"model":"cascade","k":2,"p":0.5,"x":[0.9,0.1,0.8,0.2]}"#).unwrap();
    let v: Value =
        serde_json::from_str(&ok(&infmax(&["certify", "--instance", p(&inst), "--solution", p(&sol)]))).unwrap();
    assert_eq!(v["verdict"], "NotCertified");

    let o: Value = serde_json::from_str(&ok(&infmax(&[
        "oracle", "--instance", p(&inst), "--model", "cascade", "--p", "0.5",
    ])))
    .unwrap();
    assert_eq!(o["best_set"], serde_json::json!([0, 1]));
    assert!((o["best_value"].as_f64().unwrap() - 74.75).abs() < 1e-9);
}

#[test]
fn oracle_methods() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    ok(&infmax(&["gen", "noiseless", "--k", "2", "--n", "5,6", "--r", "2,2", "--seed", "3", "--out", p(&inst)]));
    let brute: Value = serde_json::from_str(&ok(&infmax(&["oracle", "--instance", p(&inst)]))).unwrap();
    assert_eq!(brute["best_value"], 11.0);
    let greedy: Value =
        serde_json::from_str(&ok(&infmax(&["oracle", "--instance", p(&inst), "--method", "greedy"]))).unwrap();
    assert_eq!(greedy["value"], 11.0);
    let mc: Value = serde_json::from_str(&ok(&infmax(&[
        "oracle", "--instance", p(&inst), "--model", "cascade", "--method", "monte-carlo", "--trials", "20000",
    ])))
    .unwrap();
    let est = mc["estimate"]["mean"].as_f64().unwrap();
    let se = mc["estimate"]["std_error"].as_f64().unwrap();
    assert!((est - mc["closed_form"].as_f64().unwrap()).abs() <= 4.0 * se + 1e-12);
    let capped = infmax(&["oracle", "--instance", p(&inst), "--cap", "3"]);
    assert_eq!(code(&capped), 2);
}

#[test]
fn bench_is_deterministic_and_guarded() {
    let args = ["bench", "table1", "--k", "4", "--p1", "0.3,0.7", "--sigma", "0,1", "--trials", "1", "--seed", "9"];
    let a = ok(&infmax(&args));
    let b = ok(&infmax_env(&args, "INFMAX_WORKERS", "1"));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 5);

    let out = infmax(&["bench", "table2", "--k", "61", "--p1", "0.3", "--sigma", "0", "--trials", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    assert_eq!(code(&infmax_env(&args, "INFMAX_WORKERS", "0")), 2);
}

#[test]
fn bench_recovered_flags_match_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    let csv = ok(&infmax(&[
        "bench", "table2", "--k", "4", "--p1", "0.3,0.7", "--sigma", "0", "--trials", "3", "--dump", p(&dump),
    ]));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        let o: Value =
            serde_json::from_str(&std::fs::read_to_string(dump.join(format!("trial_{i:05}.json"))).unwrap()).unwrap();
        let recovered = match o["rounded"].as_array() {
            Some(y) => {
                let infl: Vec<usize> = serde_json::from_value(o["influencers"].clone()).unwrap();
                let err: f64 = infl.iter().map(|&j| (y[j].as_f64().unwrap() - 1.0).powi(2)).sum::<f64>().sqrt();
                err < 1e-8
            }
            None => false,
        };
        assert_eq!(cols[9], recovered.to_string(), "row {i}");
        assert_eq!(o["record"]["recovered"], recovered);
    }
}
