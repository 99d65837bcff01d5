//! End-to-end runs of the installed binary.

use serde_json::Value;
use std::process::{Command, Output};

fn revmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("record line parses"))
        .collect()
}

fn value_f64(rec: &Value, key: &str) -> f64 {
    rec["values"][key].as_f64().unwrap_or_else(|| panic!("missing value {key}: {rec}"))
}

#[test]
fn gap_is_exactly_one_for_single_strings_on_three_wires() {
    let recs = records(&revmix(&["gap", "--n", "3", "--k", "1", "--arch", "generic", "--seed", "7"]));
    assert_eq!(recs.len(), 1);
    assert_eq!(value_f64(&recs[0], "gap"), 1.0);
    assert_eq!(recs[0]["seed"], 7);
    assert_eq!(recs[0]["params"]["n"], 3);
}

#[test]
fn tv_at_zero_steps_is_the_uniform_distance() {
    let recs =
        records(&revmix(&["tv", "--n", "3", "--k", "2", "--arch", "nn", "--t", "0", "--seed", "1"]));
    assert!((value_f64(&recs[0], "tv") - 55.0 / 56.0).abs() < 1e-12);
    assert_eq!(recs[0]["values"]["distinct_states"], 56);
}

#[test]
fn design_direct_and_telescoped_agree() {
    let recs = records(&revmix(&[
        "design", "--n", "3", "--k", "2", "--arch", "nn", "--t", "4", "--seed", "2",
    ]));
    assert!(value_f64(&recs[0], "telescoping_gap") <= 1e-10);
}

#[test]
fn eigencheck_reports_the_reciprocal_norm() {
    let recs = records(&revmix(&["eigencheck", "--m", "4", "--k", "2", "--seed", "3"]));
    let rec = &recs[0];
    assert_eq!(rec["values"]["pass"], true);
    assert!(value_f64(rec, "max_deviation") <= 1e-12);
    assert!((value_f64(rec, "norm") - 0.25).abs() < 1e-10);
}

#[test]
fn verify_emits_one_record_per_operator() {
    let recs = records(&revmix(&["verify", "--n", "3", "--k", "1", "--seed", "5"]));
    assert_eq!(recs.len(), 7);
    for rec in &recs {
        assert_eq!(rec["values"]["pass"], true, "{rec}");
    }
}

#[test]
fn regioncheck_bounds_hold_and_zero_law_is_exact() {
    let recs = records(&revmix(&[
        "regioncheck", "--m", "5", "--k", "2", "--ell", "2", "--seed", "1",
    ]));
    let rec = &recs[0];
    assert_eq!(rec["values"]["all_hold"], true);
    assert_eq!(value_f64(rec, "zero_law_max"), 0.0);
}

#[test]
fn eval_answers_norm_queries() {
    let recs = records(&revmix(&[
        "eval", "--n", "3", "--k", "2", "--query", "norm( Q[loo] - Q[full] )", "--seed", "1",
    ]));
    assert!((value_f64(&recs[0], "norm") - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn missing_seed_is_a_usage_error() {
    let out = revmix(&["gap", "--n", "3", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_state_space_is_a_resource_error() {
    let out = revmix(&["gap", "--n", "5", "--k", "4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    // but an explicit larger cap changes the verdict at validate time
    let cfg = r#"{"experiment":"gap","params":{"n":5,"k":4},"seed":1,"cap":2000000}"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    std::fs::write(&path, cfg).unwrap();
    let recs = records(&revmix(&["validate", "--config", path.to_str().unwrap()]));
    assert_eq!(recs[0]["values"]["ok"], true);
    assert_eq!(recs[0]["values"]["state_dim"], 1 << 20);
}

#[test]
fn des2_distribution_needs_the_brickwork_architecture() {
    let out = revmix(&["gap", "--n", "4", "--k", "1", "--arch", "generic", "--dist", "des2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_roundtrip_writes_records_to_the_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("results.jsonl");
    // n=4 so a single nearest-neighbor step cannot already be uniform
    let cfg = serde_json::json!({
        "experiment": "tv",
        "params": {"n": 4, "k": 2, "arch": "nn", "t": 1},
        "seed": 42,
        "out": out_path,
        "format": "jsonl"
    });
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = revmix(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rec: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(rec["experiment"], "tv");
    assert_eq!(rec["seed"], 42);
    let tv = rec["values"]["tv"].as_f64().unwrap();
    assert!(tv > 0.0 && tv < 1.0, "tv {tv}");
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"experiment":"gap","params":{"n":3,"k":1,"bogus":1},"seed":1}"#,
        r#"{"experiment":"gap","params":{"n":3,"k":1}}"#,
        r#"{"experiment":"warp","params":{},"seed":1}"#,
        r#"{"experiment":"gap","params":{"n":3,"k":1},"seed":1,"extra":true}"#,
    ];
    for (i, cfg) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&path, cfg).unwrap();
        let out = revmix(&["run", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn validate_rejects_two_wire_circuits_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n2.json");
    std::fs::write(&path, r#"{"experiment":"verify","params":{"n":2,"k":1},"seed":1}"#).unwrap();
    let out = revmix(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let ok_path = dir.path().join("ok.json");
    std::fs::write(&ok_path, r#"{"experiment":"verify","params":{"n":3,"k":2},"seed":1}"#).unwrap();
    let recs = records(&revmix(&["validate", "--config", ok_path.to_str().unwrap()]));
    assert_eq!(recs[0]["values"]["ok"], true);
    assert_eq!(recs[0]["values"]["state_dim"], 64);
    assert_eq!(recs[0]["values"]["vector_bytes"], 512);
}

#[test]
fn csv_format_has_a_header_and_one_row_per_record() {
    let out = revmix(&["verify", "--n", "3", "--k", "1", "--seed", "5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[0].starts_with("experiment,params,values,method"));
}

#[test]
fn worker_count_does_not_change_values() {
    let run = |workers: &str| -> Vec<Value> {
        let recs = records(&revmix(&[
            "feistel-collision",
            "--n", "12", "--s", "2", "--q", "4", "--trials", "200",
            "--seed", "9", "--workers", workers,
        ]));
        recs.into_iter().map(|mut r| r["values"].take()).collect()
    };
    assert_eq!(run("1"), run("3"));

    let gap = |workers: &str| -> Vec<Value> {
        let recs = records(&revmix(&[
            "gap", "--n", "4", "--k", "2", "--arch", "nn", "--method", "power",
            "--seed", "11", "--workers", workers,
        ]));
        recs.into_iter().map(|mut r| r["values"].take()).collect()
    };
    assert_eq!(gap("1"), gap("2"));
}
