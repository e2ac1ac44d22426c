//! End-to-end tests of the command-line binary: exit codes, report
//! determinism, seed resolution, and the fixture corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qms")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("QMS_SEED")
        .output()
        .expect("binary runs")
}

#[test]
fn analyze_circulant_fixture() {
    let out = run(&["analyze", fixture("circulant_d4_n2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dim 8"), "{text}");
    assert!(text.contains("(2,1)"), "{text}");
    assert!(text.contains("holds: true"), "{text}");
}

#[test]
fn analyze_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "analyze",
            fixture("circulant_d4_n2.json").to_str().unwrap(),
            "--json",
            path.to_str().unwrap(),
            "--seed",
            "12345",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn analyze_fixed_point_example_with_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("r.json");
    let out = run(&[
        "analyze",
        fixture("example_ft_no_alg.json").to_str().unwrap(),
        "--json",
        json_path.to_str().unwrap(),
        "--reduce-pr",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(rep["nt"]["dim"], 2);
    assert_eq!(rep["ft"]["dim"], 4);
    assert_eq!(rep["ft"]["is_algebra"], false);
    assert_eq!(rep["states"]["faithful_exists"], false);
    assert_eq!(rep["states"]["p_r_rank"], 2);
    assert_eq!(rep["reduced"]["states"]["faithful_exists"], true);
}

#[test]
fn malformed_file_exits_3_without_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{definitely not json").unwrap();
    let json_path = dir.path().join("out.json");
    let out = run(&[
        "analyze",
        bad.to_str().unwrap(),
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!json_path.exists());
}

#[test]
fn missing_file_exits_3() {
    let out = run(&["analyze", "/nonexistent/nope.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn structural_problem_exits_2() {
    // well-formed JSON but a non-Hermitian Hamiltonian
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("nonherm.json");
    fs::write(
        &bad,
        r#"{"dim":2,"h":[[[0,0],[1,0]],[[0,0],[0,0]]],"ls":[]}"#,
    )
    .unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_resolution_order() {
    let file = fixture("circulant_d4_n2.json");
    // default seed
    let out = run(&["analyze", file.to_str().unwrap()]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("0x5eed"));
    // environment variable overrides the default
    let out = Command::new(bin())
        .args(["analyze", file.to_str().unwrap()])
        .env("QMS_SEED", "77")
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("0x4d"));
    // --seed overrides the environment
    let out = Command::new(bin())
        .args(["analyze", file.to_str().unwrap(), "--seed", "99"])
        .env("QMS_SEED", "77")
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("0x63"));
}

#[test]
fn fixtures_generate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    let out = run(&[
        "fixtures",
        "generate",
        "generic",
        "--states",
        "3",
        "--rate",
        "0:1:1.0",
        "--rate",
        "1:0:1.0",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dim 2"), "{text}");
}

#[test]
fn fixtures_generate_rejects_bad_rate() {
    let out = run(&[
        "fixtures", "generate", "generic", "--states", "2", "--rate", "nonsense",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_prints_decay_table() {
    let out = run(&[
        "simulate",
        fixture("circulant_d4_n2.json").to_str().unwrap(),
        "--t",
        "2.0",
        "--state-index",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("trace distance"));
    assert_eq!(lines.len(), 12); // header + 11 samples
    // distances decay
    let first: f64 = lines[1].split_whitespace().nth(1).unwrap().parse().unwrap();
    let last: f64 = lines[11].split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(last < first * 1e-2, "no decay: {first} -> {last}");
}

#[test]
fn simulate_rejects_bad_state_index() {
    let out = run(&[
        "simulate",
        fixture("circulant_d4_n2.json").to_str().unwrap(),
        "--t",
        "1.0",
        "--state-index",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generic_fixture_file_matches_expected_structure() {
    let out = run(&[
        "analyze",
        fixture("generic_4state_two_class.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dim 5"), "{text}");
}
