//! End-to-end runs of the `elemsketch` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elemsketch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path, matrix: &str) -> std::path::PathBuf {
    let spec = serde_json::json!({
        "dataset": {"source": "file", "path": matrix},
        "variants": ["H_sp", "U_sp", "H_max"],
        "r_list": [2, 4],
        "budget": {"mode": "fraction", "fraction": 0.3, "base": "entries"},
        "seeds": [0, 1, 2]
    });
    let p = dir.join("spec.json");
    std::fs::write(&p, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    p
}

#[test]
fn generate_then_bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    let out = run(&["generate", "--generator", "low-rank-noise", "--m", "30", "--n", "20", "--seed", "4", "--output", path(&mtx)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Relative paths resolve against the experiment file's directory.
    let spec = write_spec(dir.path(), "a.mtx");
    let first = run(&["bench", "--spec", path(&spec)]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = run(&["--threads", "1", "bench", "--spec", path(&spec)]);
    assert_eq!(first.stdout, second.stdout);
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    // H_sp, U_sp, H_max plus the G_sp and G_max baselines.
    assert_eq!(report["cells"].as_array().unwrap().len(), 5 * 2 * 3);
    assert_eq!(report["medians"].as_array().unwrap().len(), 5 * 2);
}

#[test]
fn bench_csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.csv");
    assert!(run(&["generate", "--generator", "binary-pixel", "--m", "20", "--n", "15", "--output", path(&mtx)]).status.success());
    let spec = write_spec(dir.path(), "a.csv");
    let out_file = dir.path().join("report.csv");
    let out = run(&["--format", "csv", "bench", "--spec", path(&spec), "--output", path(&out_file)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_file).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("variant,r,seed,f,ratio"));
    // 30 per-seed rows and 10 median rows.
    assert_eq!(lines.count(), 40);
}

#[test]
fn sketch_alpha_spca_deviate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mtx");
    let b = dir.path().join("b.mtx");
    assert!(run(&["generate", "--generator", "spiky-powerlaw", "--m", "25", "--n", "12", "--output", path(&a)]).status.success());

    let out = run(&["alpha", "--input", path(&a), "--eps", "0.3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let alpha = v["alpha_star"].as_f64().unwrap();
    assert!(alpha > 0.0 && alpha <= 1.0);

    let out = run(&["sketch", "--input", path(&a), "--fraction", "0.5", "--output", path(&b), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["rows"], 25);
    assert!(s["nnz"].as_u64().unwrap() <= s["s"].as_u64().unwrap());

    let out = run(&["spca", "--input", path(&b), "--evaluate-on", path(&a), "--r", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["deviate", "--input", path(&a), "--sketch", path(&b)]);
    assert!(out.status.success());
    let d: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(d["gram_diff"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bad_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mtx");
    assert!(run(&["generate", "--generator", "binary-pixel", "--m", "10", "--n", "8", "--output", path(&a)]).status.success());
    assert_eq!(run(&["alpha", "--input", path(&a), "--eps", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["spca", "--input", path(&a), "--r", "99"]).status.code(), Some(2));
    assert_eq!(run(&["--threads", "0", "alpha", "--input", path(&a)]).status.code(), Some(2));
    assert_eq!(run(&["sketch", "--input", path(&a), "--dist", "bogus"]).status.code(), Some(2));
}

#[test]
fn parse_errors_exit_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 3.0\n").unwrap();
    let out = run(&["alpha", "--input", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_file_exits_one() {
    let out = run(&["alpha", "--input", "/nonexistent/a.mtx"]);
    assert_eq!(out.status.code(), Some(1));
}
