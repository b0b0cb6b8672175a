use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpfraisse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpfraisse"))
        .env_remove("LPFRAISSE_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

const SMALL_SUITE: [&str; 10] = [
    "--seed",
    "7",
    "suite",
    "--scale",
    "small",
    "--criterion",
    "1",
    "--criterion",
    "4",
    "--criterion=8",
];

#[test]
fn suite_report_is_byte_identical_across_runs_and_jobs() {
    let a = lpfraisse(&SMALL_SUITE);
    let b = lpfraisse(&SMALL_SUITE);
    let mut parallel = SMALL_SUITE.to_vec();
    parallel.extend(["--jobs", "3"]);
    let c = lpfraisse(&parallel);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let rows = json(&a);
    let ids: Vec<u64> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["criterion"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, [1, 4, 8]);
    assert!(rows
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["result"] == "pass" && r["seed"].is_u64()));
}

#[test]
fn seed_env_var_is_a_fallback_for_the_flag() {
    let flag = lpfraisse(&[
        "--seed",
        "11",
        "measures",
        "odd-search",
        "-p",
        "3",
        "--budget-samples",
        "50",
    ]);
    let env = Command::new(env!("CARGO_BIN_EXE_lpfraisse"))
        .env("LPFRAISSE_SEED", "11")
        .args([
            "measures",
            "odd-search",
            "-p",
            "3",
            "--budget-samples",
            "50",
        ])
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    assert_eq!(json(&flag)["seed"], 11);
}

#[test]
fn certify_output_replays_through_suite() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.jsonl");
    let p = path.to_str().unwrap();
    let out = lpfraisse(&[
        "equi", "certify", "-d", "2", "-m", "4", "-r", "2", "--eps", "0.4", "--delta", "0.1",
        "--out", p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout, std::fs::read(&path).unwrap());
    let header: Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(header["verdict"], true);
    assert_eq!(header["n"].as_u64().unwrap() % 4, 0);

    let replay = lpfraisse(&["suite", "--replay", p]);
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(json(&replay)["replays"], true);
}

#[test]
fn tampered_certificate_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.jsonl");
    let p = path.to_str().unwrap();
    lpfraisse(&[
        "equi", "certify", "-d", "2", "-m", "4", "-r", "2", "--eps", "0.4", "--delta", "0.1",
        "--out", p,
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    let n = serde_json::from_str::<Value>(text.lines().next().unwrap()).unwrap()["n"]
        .as_u64()
        .unwrap();
    let tampered = text.replace(&format!("\"n\":{n}"), &format!("\"n\":{}", n + 1));
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();
    let replay = lpfraisse(&["suite", "--replay", p]);
    assert_eq!(replay.status.code(), Some(1));
    assert_eq!(json(&replay)["replays"], false);
}

#[test]
fn even_p_counterexample_is_serialized() {
    let out = lpfraisse(&["measures", "counterexample", "-p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["mu"]["atoms"].is_array() && v["nu"]["atoms"].is_array());
    assert_ne!(v["mu"], v["nu"]);
    assert!(v["char_diff"].as_f64().unwrap() <= 1e-10);
    assert!(v["lp"].as_f64().unwrap() > 0.1);
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn malformed_input_reports_json_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.json",
        r#"{"p": 3, "point": [1, 1, 0], "basis": [[1, 0, 0], [0, "one", 0]]}"#,
    );
    let out = lpfraisse(&["geometry", "distance", "--input", &p]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("at /basis/1/1:"), "{err}");
    assert!(out.stdout.is_empty());

    let missing = lpfraisse(&[
        "lattice",
        "check",
        "--delta",
        "0.1",
        "--input",
        "/nonexistent/rows.json",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_gives_uncertified_partial_report() {
    let out = lpfraisse(&[
        "--budget-n",
        "10",
        "equi",
        "certify",
        "-d",
        "2",
        "-m",
        "4",
        "-r",
        "2",
        "--eps",
        "0.4",
        "--delta",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["uncertified"], true);
    assert!(v["reason"].as_str().unwrap().contains("no certified n"));
}

#[test]
fn csv_and_table_formats_render() {
    let csv = lpfraisse(&[
        "--format",
        "csv",
        "equi",
        "delta",
        "--map",
        "0,0,1,1,1",
        "-s",
        "2",
    ]);
    assert_eq!(
        String::from_utf8_lossy(&csv.stdout),
        "delta,preimage_sizes\n1/5,\"[2,3]\"\n"
    );
    let table = lpfraisse(&[
        "--format",
        "table",
        "equi",
        "delta",
        "--map",
        "0,0,1,1,1",
        "-s",
        "2",
    ]);
    assert_eq!(
        String::from_utf8_lossy(&table.stdout),
        "delta           1/5\npreimage_sizes  [2,3]\n"
    );
}

#[test]
fn failed_check_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "rows.json", r#"{"rows": [[1, 0.5], [0.5, 1]]}"#);
    let out = lpfraisse(&["lattice", "check", "--input", &p, "--delta", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["disjoint"], false);
}
