//! End-to-end runs of the `momentray` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIELD_2D: &str = r#"{"n": 2, "m": 1, "a": 1.0, "components": {
    "1": [{"c": 1.0, "pow": [1, 0]}, {"c": 0.5, "pow": [0, 0]}],
    "2": [{"c": -0.3, "pow": [0, 2]}]}}"#;

const FIELD_3D: &str = r#"{"n": 3, "m": 2, "a": 1.0, "components": {
    "11": [{"c": 1.0, "pow": [1, 0, 0]}, {"c": 0.5, "pow": [0, 0, 0]}],
    "23": [{"c": -0.3, "pow": [0, 2, 0]}],
    "33": [{"c": 0.7, "pow": [0, 1, 1]}]}}"#;

fn run(dir: &Path, args: &[&str], threads: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momentray"))
        .args(args)
        .current_dir(dir)
        .env("MOMENTRAY_THREADS", threads.to_string())
        .output()
        .expect("binary runs")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f2.json"), FIELD_2D).unwrap();
    std::fs::write(dir.path().join("f3.json"), FIELD_3D).unwrap();
    dir
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn report(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// One invocation per subcommand, small enough to finish quickly.
fn suite() -> Vec<Vec<&'static str>> {
    vec![
        vec![
            "transform",
            "--field",
            "f2.json",
            "--k",
            "1",
            "--directions",
            "8",
            "--offsets",
            "9",
            "--out",
            "tr.json",
        ],
        vec![
            "decompose",
            "--field",
            "f2.json",
            "--k",
            "1",
            "--grid",
            "32",
            "--out-prefix",
            "dec",
        ],
        vec![
            "oracle-diff",
            "--n",
            "3",
            "--m",
            "2",
            "--k",
            "2",
            "--lines",
            "50",
            "--seed",
            "3",
            "--out",
            "od.csv",
        ],
        vec![
            "rank-probe",
            "--n",
            "3",
            "--m",
            "3",
            "--k",
            "2",
            "--trials",
            "5",
            "--seed",
            "3",
            "--out",
            "rp.csv",
        ],
        vec![
            "check-kernel",
            "--n",
            "2",
            "--m",
            "2",
            "--k",
            "1",
            "--lines",
            "40",
            "--seed",
            "3",
            "--out",
            "ker.csv",
        ],
        vec![
            "check-range",
            "--field",
            "f3.json",
            "--m",
            "2",
            "--k",
            "1",
            "--tuples",
            "8",
            "--parity-lines",
            "20",
            "--out",
            "rg.json",
        ],
        vec![
            "chi-verify",
            "--n",
            "3",
            "--m",
            "2",
            "--l",
            "1",
            "--points",
            "3",
            "--tuples",
            "2",
            "--seed",
            "3",
            "--out",
            "chi.json",
        ],
        vec![
            "slice-check",
            "--n",
            "2",
            "--m",
            "1",
            "--trials",
            "2",
            "--samples",
            "32",
            "--seed",
            "3",
            "--out",
            "sl.csv",
        ],
    ]
}

#[test]
fn every_subcommand_passes_and_reruns_byte_identically() {
    let a = workspace();
    let b = workspace();
    for args in suite() {
        let first = run(a.path(), &args, 1);
        assert!(
            first.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        let second = run(b.path(), &args, 4);
        assert!(second.status.success(), "{args:?}");
    }
    let verify = [
        "verify",
        "--f",
        "dec.f.bin",
        "--g",
        "dec.g.bin",
        "--v",
        "dec.v.bin",
        "--k",
        "1",
        "--out",
        "ver.json",
    ];
    assert!(run(a.path(), &verify, 1).status.success());
    assert!(run(b.path(), &verify, 4).status.success());

    let (ca, cb) = (csv_files(a.path()), csv_files(b.path()));
    assert!(
        ca.len() >= 10,
        "{:?}",
        ca.iter().map(|c| &c.0).collect::<Vec<_>>()
    );
    assert_eq!(ca.len(), cb.len());
    for ((na, da), (nb, db)) in ca.iter().zip(&cb) {
        assert_eq!(na, nb);
        assert!(da == db, "{na} differs between runs");
    }
}

#[test]
fn reports_carry_the_envelope() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "rank-probe",
            "--n",
            "2",
            "--m",
            "2",
            "--k",
            "1",
            "--trials",
            "3",
            "--out",
            "rp.json",
        ],
        1,
    );
    assert!(out.status.success());
    let r = report(dir.path().join("rp.json"));
    for key in [
        "command",
        "version",
        "generator",
        "seed",
        "config",
        "wall_time_seconds",
        "pass",
        "results",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["command"], "rank-probe");
    assert_eq!(r["config"]["trials"], 3);
    assert_eq!(r["pass"], true);
}

#[test]
fn decompose_then_verify_reproduces_the_residuals() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "decompose",
            "--field",
            "f3.json",
            "--k",
            "1",
            "--grid",
            "24",
            "--extent",
            "7",
            "--out-prefix",
            "d",
        ],
        2,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dec = report(dir.path().join("d.report.json"));
    let out = run(
        dir.path(),
        &[
            "verify", "--f", "d.f.bin", "--g", "d.g.bin", "--v", "d.v.bin", "--k", "1", "--out",
            "v.json",
        ],
        2,
    );
    assert!(out.status.success());
    let ver = report(dir.path().join("v.json"));
    let key = |r: &serde_json::Value, name: &str| r["results"]["residuals"][name].as_f64().unwrap();
    for name in ["reconstruction", "solenoidality"] {
        assert_eq!(key(&dec, name), key(&ver, name), "{name}");
        assert!(key(&ver, name) < 1e-6);
    }
}

#[test]
fn corrupted_range_data_fails_with_exit_one() {
    let dir = workspace();
    let args = [
        "check-range",
        "--field",
        "f3.json",
        "--m",
        "2",
        "--k",
        "1",
        "--tuples",
        "8",
        "--corrupt",
        "0.1",
        "--out",
        "bad.json",
    ];
    let out = run(dir.path(), &args, 1);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(dir.path().join("bad.json"))["pass"], false);
}

#[test]
fn malformed_input_names_the_key_and_exits_two() {
    let dir = workspace();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"n": 3, "m": 2, "a": 1.0, "components": {"11": [{"c": 1, "pow": [1, 0]}]}}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "transform",
            "--field",
            "bad.json",
            "--k",
            "1",
            "--out",
            "x.json",
        ],
        1,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("components.11[0].pow"), "{err}");

    let out = run(dir.path(), &["rank-probe", "--n", "2", "--m", "1"], 1);
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        dir.path(),
        &[
            "decompose",
            "--field",
            "f2.json",
            "--k",
            "2",
            "--grid",
            "16",
            "--out-prefix",
            "z",
        ],
        1,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_result_sets_write_header_only_tables() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "rank-probe",
            "--n",
            "3",
            "--m",
            "2",
            "--k",
            "1",
            "--trials",
            "0",
            "--out",
            "e.csv",
        ],
        1,
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("trial,"));
}
