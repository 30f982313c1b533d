use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lcent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcent")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn counterexample_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcent(&["counterexample", "--lambda0", "0.1", "--h", "1", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("# {\"version\""));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!((col("gap_closed") - 0.223800).abs() < 1e-6);
    assert!(col("abs_discrepancy") <= 1e-9);
}

#[test]
fn counterexample_threshold_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcent(&["counterexample", "--lambda0", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("1/(2(2+√2))"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flags_and_keys_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lcent(&["counterexample", "--lambda", "0.1"], dir.path()).status.code(), Some(2));
    write(dir.path(), "bad.json", r#"{"lambda0": 0.1, "colour": "red"}"#);
    assert_eq!(lcent(&["--config", "bad.json", "counterexample"], dir.path()).status.code(), Some(2));
    write(dir.path(), "broken.json", "{");
    assert_eq!(lcent(&["--config", "broken.json", "counterexample"], dir.path()).status.code(), Some(2));
    assert_eq!(lcent(&["verify", "--trials", "1", "--kappa", "0.5"], dir.path()).status.code(), Some(2));
    assert_eq!(lcent(&["entropy", "--density", "missing.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn entropy_of_triangle_density() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.json", r#"{"breakpoints":[-1,0,1],"pieces":[[0,1],[1,-1]]}"#);
    let o = lcent(&["entropy", "--density", "tri.json", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let value: f64 = stdout(&o).lines().nth(2).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((value - 0.5).abs() < 1e-12);
    let json: serde_json::Value = serde_json::from_str(&stdout(&lcent(&["entropy", "--density", "tri.json"], dir.path()))).unwrap();
    assert!((json["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"lambda0": 0.05, "h": 2.0, "format": "csv"}"#);
    let o = lcent(&["--config", "c.json", "counterexample", "--lambda0", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row: Vec<f64> = out.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[0], 0.1);
    assert_eq!(row[2], 2.0);
}

#[test]
fn project_square_along_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sq.json", r#"{"type":"polygon","vertices":[[0.5,0.5],[-0.5,0.5],[-0.5,-0.5],[0.5,-0.5]]}"#);
    let o = lcent(&["project", "--model", "sq.json", "--direction", "1,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((json["result"]["entropy"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let o = lcent(&["project", "--model", "sq.json", "--direction", "-1,0.5", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2 + 513);
}

#[test]
fn concavity_hypothesis_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bump.json", r#"{"breakpoints":[-2,-1,1,2],"pieces":[[0.5],[0],[0.5]]}"#);
    assert_eq!(lcent(&["concavity", "--density", "bump.json"], dir.path()).status.code(), Some(2));
    let o = lcent(&["concavity", "--density", "bump.json", "--allow-non-log-concave", "--output-dir", "certs"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cert = fs::read_to_string(dir.path().join("certs/violation-lambda_concavity-0-0.json")).unwrap();
    let cert = lcent::harness::ViolationCertificate::from_json(&cert).unwrap();
    lcent::harness::verify_certificate(&cert, 1e-8).unwrap();
}

#[test]
fn scan_kappa_on_random_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let o = lcent(&["scan-kappa", "--family", "polygon", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(json["result"]["kappa"].as_f64().unwrap() >= 0.2);
}

#[test]
fn verify_is_reproducible_from_its_echo() {
    let dir = tempfile::tempdir().unwrap();
    let a = lcent(&["verify", "--seed", "7", "--trials", "10", "--threads", "1", "--output-dir", "a"], dir.path());
    let b = lcent(&["verify", "--seed", "7", "--trials", "10", "--threads", "2", "--output-dir", "b"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&b));
    let ra = fs::read(dir.path().join("a/reports.jsonl")).unwrap();
    assert_eq!(ra, fs::read(dir.path().join("b/reports.jsonl")).unwrap());
    // rerun from the embedded config alone
    let first = String::from_utf8(ra).unwrap().lines().next().unwrap().to_string();
    let header: serde_json::Value = serde_json::from_str(&first).unwrap();
    write(dir.path(), "echo.json", &header["config"].to_string());
    let c = lcent(&["--config", "echo.json", "verify", "--output-dir", "c"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&c));
    assert_eq!(fs::read(dir.path().join("a/reports.jsonl")).unwrap(), fs::read(dir.path().join("c/reports.jsonl")).unwrap());
    assert_eq!(fs::read(dir.path().join("a/summary.csv")).unwrap(), fs::read(dir.path().join("c/summary.csv")).unwrap());
}
