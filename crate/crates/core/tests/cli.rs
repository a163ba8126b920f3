use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apdestroy")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let out = run(&["--json", "construct", "--p", "13", "--seed", "7", "--out", path_str(&cert)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["survivor_count"], 0);
    assert_eq!(summary["construction"], "two_swap_plus_repair");

    let out = run(&["verify", path_str(&cert)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified"));

    let mut record: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    let images = record["images"].as_array_mut().unwrap();
    images.swap(2, 5);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, record.to_string()).unwrap();
    let out = run(&["--json", "verify", path_str(&bad)]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["hash_matches"], false);
}

#[test]
fn construct_without_out_prints_the_certificate() {
    let out = run(&["construct", "--p", "3", "--k", "3", "--explicit-moduli"]);
    assert_eq!(code(&out), 0);
    let record = json(&out);
    assert_eq!(record["modulus"], serde_json::json!([1, 2, 0, 1]));
    assert_eq!(record["construction"], "p3_swap");
    assert_eq!(record["images"].as_array().unwrap().len(), 27);
}

#[test]
fn impossible_fields_are_negative_results() {
    assert_eq!(code(&run(&["construct", "--p", "7"])), 1);
    assert_eq!(code(&run(&["construct", "--p", "2", "--k", "5"])), 1);

    let f7 = serde_json::json!({
        "p": 7, "k": 1, "modulus": [0, 1], "construction": "exhaustive", "y": null, "z": null,
        "repair_swaps": [], "seed": null, "images": [1, 0, 4, 5, 2, 3, 6], "survivor_count": 0,
        "content_hash": "x", "artifact_version": "0.1.0"
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f7.json");
    std::fs::write(&path, f7.to_string()).unwrap();
    let out = run(&["verify", path_str(&path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no AP-destroying permutation"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(code(&run(&["construct"])), 2);
    assert_eq!(code(&run(&["verify", "/nonexistent/cert.json"])), 2);
    assert_eq!(code(&run(&["construct", "--p", "4"])), 2);
    assert_eq!(code(&run(&["construct", "--p", "3", "--k", "2", "--modulus", "1,2,1"])), 2);
    assert_eq!(code(&run(&["nonexist", "--q", "9"])), 2);
    assert_eq!(code(&run(&["nonexist", "--q", "6"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("g.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&run(&["verify", path_str(&garbage)])), 2);
}

#[test]
fn survivors_of_the_base_permutation() {
    let out = run(&["--json", "survivors", "--p", "13", "--perm", "base-f"]);
    assert_eq!(code(&out), 1);
    let record = json(&out);
    assert_eq!(record["count"], 2);
    // (0, 3/2, 3) = (0, 8, 3) and (1/3, 2/3, 1) = (9, 5, 1) in GF(13)
    let mut sets: Vec<Vec<u64>> = record["triples"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let mut v: Vec<u64> = t.as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    sets.sort();
    assert_eq!(sets, [vec![0, 3, 8], vec![1, 5, 9]]);

    let out = run(&["--json", "survivors", "--p", "3", "--k", "2"]);
    assert_eq!(json(&out)["count"], 1);
}

#[test]
fn survivors_of_a_certificate_file() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    assert_eq!(code(&run(&["construct", "--p", "5", "--k", "2", "--out", path_str(&cert)])), 0);
    let out = run(&["--json", "survivors", "--p", "5", "--k", "2", "--perm", path_str(&cert)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["count"], 0);
}

#[test]
fn nonexistence_for_small_fields() {
    for q in ["3", "5", "7"] {
        let out = run(&["--json", "nonexist", "--q", q]);
        assert_eq!(code(&out), 0);
        assert_eq!(json(&out)["nonexistent"], true);
    }
    let out = run(&["--json", "nonexist", "--q", "8"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["permutations_checked"], 40320);
}

#[test]
fn charsum_checks_echo_their_seed() {
    let out = run(&["--json", "charsum", "--check", "hasse", "--p", "7", "--k", "2", "--seed", "11", "--trials", "50"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["seed"], 11);
    assert_eq!(r["trials"], 100);
    assert_eq!(r["failures"], 0);

    let out = run(&["charsum", "--check", "weil2", "--p", "13", "--trials", "100"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed=1"));

    let out = run(&["--json", "charsum", "--check", "aq", "--p", "3", "--k", "5"]);
    assert_eq!(json(&out)["extremal_lhs"], 244);

    assert_eq!(code(&run(&["charsum", "--check", "bq", "--p", "443"])), 0);
    assert_eq!(code(&run(&["charsum", "--check", "bq", "--p", "3", "--k", "2"])), 2);
}

#[test]
fn table_then_verify_database() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.json");
    let out = run(&["--json", "table", "--max-q", "31", "--out", path_str(&db)]);
    assert_eq!(code(&out), 0);
    let summary = json(&out);
    assert_eq!(summary["certificates"], 10);
    assert_eq!(summary["repair_seed"], 1);

    let out = run(&["--json", "verify", path_str(&db)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["entries"], 10);

    let mut value: Value = serde_json::from_str(&std::fs::read_to_string(&db).unwrap()).unwrap();
    let entry = value["entries"].as_object_mut().unwrap().values_mut().next().unwrap();
    entry["survivor_count"] = 3.into();
    std::fs::write(&db, value.to_string()).unwrap();
    assert_eq!(code(&run(&["verify", path_str(&db)])), 1);

    let out = run(&["table", "--max-q", "100", "--k", "2", "--out", path_str(&db)]);
    assert_eq!(code(&out), 0);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&db).unwrap()).unwrap();
    let keys: Vec<&String> = value["entries"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["3^2/1,0,1", "5^2/1,1,1", "7^2/1,0,1"]);
}
