use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netbell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn realize(dir: &Path, m: &str) -> String {
    let path = dir.join(format!("r{m}.json")).to_str().unwrap().to_owned();
    let out = netbell(&["realize", "--scenario", "bilocal", "--m", m, "--out", &path]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn bound_prints_closed_forms() {
    let out = netbell(&["bound", "--scenario", "bilocal", "--m", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("classical_bound: 6\n"), "{text}");
    assert!(text.contains("quantum_optimum: 6.92820323028"), "{text}");

    let v = json(&netbell(&[
        "--format",
        "json",
        "bound",
        "--scenario",
        "bilocal",
        "--m",
        "3",
        "--brute-force",
    ]));
    assert_eq!(v["brute_force_delta"], 6.0);
    assert_eq!(v["brute_force_eta"], 6);
}

#[test]
fn star_bound() {
    let v = json(&netbell(&[
        "bound",
        "--scenario",
        "star",
        "--n",
        "3",
        "--format",
        "json",
        "--brute-force",
    ]));
    assert_eq!(v["classical_bound"], 2.0);
    assert_eq!(v["quantum_optimum"], 2.82842712475);
    assert_eq!(v["brute_force_delta"], 2.0);
}

#[test]
fn capacity_exit_code() {
    let out = netbell(&[
        "bound",
        "--scenario",
        "bilocal",
        "--m",
        "99",
        "--brute-force",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn invalid_input_exit_code() {
    assert_eq!(
        code(&netbell(&["bound", "--scenario", "bilocal", "--m", "1"])),
        2
    );
    assert_eq!(
        code(&netbell(&["bound", "--scenario", "star", "--m", "3"])),
        2
    );
    assert_eq!(
        code(&netbell(&["bound", "--scenario", "ring", "--m", "3"])),
        2
    );
    assert_eq!(
        code(&netbell(&["certify", "--in", "/nonexistent/file.json"])),
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"scenario\": 1}").unwrap();
    assert_eq!(
        code(&netbell(&["certify", "--in", bad.to_str().unwrap()])),
        2
    );
}

#[test]
fn realize_then_certify() {
    let dir = tempfile::tempdir().unwrap();
    let path = realize(dir.path(), "3");
    let out = netbell(&[
        "certify", "--in", &path, "--tol", "1e-9", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["overall"], true);
    assert_eq!(v["delta_value"], 6.92820323028);
    assert_eq!(v["entries"][0]["name"], "delta.violation");
}

#[test]
fn certify_fails_with_exit_one_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noisy.json");
    let p = path.to_str().unwrap();
    let out = netbell(&[
        "realize",
        "--scenario",
        "bilocal",
        "--m",
        "2",
        "--visibility",
        "0.5,0.5",
        "--out",
        p,
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&netbell(&["certify", "--in", p])), 1);
}

#[test]
fn realization_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = realize(dir.path(), "3");
    let written = std::fs::read_to_string(&path).unwrap();
    let printed = stdout(&netbell(&["realize", "--scenario", "bilocal", "--m", "3"]));
    assert_eq!(written, printed);
    let back = netbell_core::io::realization_from_json(&written).unwrap();
    assert_eq!(netbell_core::io::realization_to_json(&back), written);
}

fn flatten(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.push(n.as_f64().unwrap()),
        Value::Array(a) => a.iter().for_each(|x| flatten(x, out)),
        Value::Object(o) => o.values().for_each(|x| flatten(x, out)),
        _ => {}
    }
}

fn numbers_in_text(text: &str) -> Vec<f64> {
    text.split(|c: char| c.is_whitespace() || ",[]=:".contains(c))
        .filter_map(|t| t.parse::<f64>().ok())
        .collect()
}

#[test]
fn text_and_json_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = realize(dir.path(), "2");
    for args in [
        vec![
            "bound",
            "--scenario",
            "bilocal",
            "--m",
            "4",
            "--brute-force",
        ],
        vec!["sample", "--in", &path, "--shots", "2000", "--seed", "3"],
        vec!["certify", "--in", &path],
    ] {
        let text = stdout(&netbell(&args));
        let mut jargs = args.clone();
        jargs.extend(["--format", "json"]);
        let mut from_json = Vec::new();
        flatten(&json(&netbell(&jargs)), &mut from_json);
        let from_text = numbers_in_text(&text);
        for x in &from_json {
            assert!(
                from_text.contains(x),
                "{x} missing from text output of {args:?}"
            );
        }
    }
}

#[test]
fn sample_is_reproducible_and_writes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = realize(dir.path(), "3");
    let counts = dir.path().join("counts.tsv");
    let args = [
        "sample", "--in", &path, "--shots", "100000", "--seed", "1", "--format", "json",
    ];
    let a = json(&netbell(&args));
    let b = json(&netbell(&args));
    assert_eq!(a, b);
    assert!(a["delta"].as_f64().unwrap() > 6.0);
    assert_eq!(a["correlators"].as_array().unwrap().len(), 3);
    let out = netbell(&[
        "sample",
        "--in",
        &path,
        "--shots",
        "480",
        "--counts",
        counts.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(&counts).unwrap();
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    let total: u64 = rows.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 480);
    let tuples: std::collections::HashSet<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(tuples.len(), 48);
}

#[test]
fn optimize_star_reaches_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("best.json");
    let out = netbell(&[
        "optimize",
        "--scenario",
        "star",
        "--n",
        "2",
        "--dims",
        "2,2,2,2",
        "--restarts",
        "20",
        "--seed",
        "7",
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(v["restart_values"].as_array().unwrap().len(), 20);
    let certified = netbell(&[
        "certify",
        "--in",
        out_path.to_str().unwrap(),
        "--tol",
        "1e-6",
    ]);
    assert!(stdout(&certified).contains("delta.optimal"));
}

#[test]
fn optimize_rejects_bad_dims() {
    let out = netbell(&[
        "optimize",
        "--scenario",
        "star",
        "--n",
        "2",
        "--dims",
        "2,2",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn selftest_passes() {
    let out = netbell(&["selftest"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 8);
}
