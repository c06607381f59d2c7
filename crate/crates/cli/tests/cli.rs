//! End-to-end runs of the `bowen-dim` binary.

use std::process::{Command, Output};

use bowen_cli::{load_model, serialize_config, ModelConfig};

fn bowen_dim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bowen-dim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.nth(row).unwrap().split(',').nth(idx).unwrap().to_string()
}

#[test]
fn cantor_root_matches_closed_form() {
    let o = bowen_dim(&["root", "--model", "cantor3"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("method,n,root,lo,hi,evaluations,clamped\n"));
    let root: f64 = column(&csv, 0, "root").parse().unwrap();
    assert!((root - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
}

#[test]
fn baker_doubling_sequence_is_flat() {
    let o = bowen_dim(&["doubling", "--model", "baker34", "--lmax", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 4);
    let expected = 1.0 + (4f64 / 3.0).ln() / 4f64.ln();
    for row in 0..3 {
        let t: f64 = column(&csv, row, "t").parse().unwrap();
        assert!((t - expected).abs() < 1e-6, "row {row}: {t}");
        assert_eq!(column(&csv, row, "monotone"), "true");
    }
}

#[test]
fn golden_audit_passes() {
    let o = bowen_dim(&["audit", "--model", "golden3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = stdout(&o);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("true")));
}

#[test]
fn output_is_byte_identical_across_runs() {
    for cmd in ["pressure", "stopping", "boxdim"] {
        let a = bowen_dim(&[cmd, "--model", "scalar23"]);
        let b = bowen_dim(&[cmd, "--model", "scalar23"]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn json_mirrors_csv_rows() {
    let csv = stdout(&bowen_dim(&["pressure", "--model", "cantor3"]));
    let json = stdout(&bowen_dim(&["pressure", "--model", "cantor3", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["command"], "pressure");
    assert_eq!(v["rows"].as_array().unwrap().len(), csv.lines().count() - 1);
    assert_eq!(v["status"], "ok");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = bowen_dim(&[
        "compare",
        "--model",
        "cantor3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let body = std::fs::read_to_string(&path).unwrap();
    assert!(body.starts_with("root,"));
    assert_eq!(column(&body, 0, "bound_ok"), "true");
}

#[test]
fn config_file_round_trip_gives_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("baker.toml");
    let lm = load_model("baker34").unwrap();
    std::fs::write(&path, serialize_config(&ModelConfig::from_model(&lm.model))).unwrap();
    let from_file = bowen_dim(&["root", "--model", path.to_str().unwrap()]);
    let builtin = bowen_dim(&["root", "--model", "baker34"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, builtin.stdout);
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "name = \"bad\"\nalphabet_size = 2\ntransition = [[1, 1], [1, 1]]\nu = 1\n\
         matrices = [[0.3], [1.1]]\noffsets = [[0.0], [0.5]]\n",
    )
    .unwrap();
    let o = bowen_dim(&["root", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("matrices[1]"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(bowen_dim(&["root"]).status.code(), Some(1));
    assert_eq!(bowen_dim(&["nope", "--model", "cantor3"]).status.code(), Some(1));
    assert_eq!(
        bowen_dim(&["stopping", "--model", "cantor3", "--r-grid", "0.1:0.5"]).status.code(),
        Some(1)
    );
    assert_eq!(
        bowen_dim(&["pressure", "--model", "cantor3", "--s", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(bowen_dim(&["--help"]).status.code(), Some(0));
}

#[test]
fn caps_exit_three() {
    let o = bowen_dim(&["doubling", "--model", "cantor3", "--lmax", "9"]);
    assert_eq!(o.status.code(), Some(3));
    let o = bowen_dim(&["pressure", "--model", "cantor3", "--n", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn stopping_rows_follow_r_grid() {
    let o = bowen_dim(&[
        "stopping",
        "--model",
        "golden3",
        "--r-grid",
        "0.01:0.5:3",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let counts: Vec<u64> = rows.iter().map(|r| r["count"].as_u64().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}
