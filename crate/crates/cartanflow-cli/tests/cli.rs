use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartanflow"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cartanflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn builtin(name: &str) -> PathBuf {
    scratch(&format!("{name}.json"), &format!(r#"{{"kind":"builtin","data":"{name}"}}"#))
}

fn run(args: &[&str], spec: &PathBuf) -> Output {
    bin().args(args).arg(spec).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn footer(csv: &str, key: &str) -> f64 {
    let prefix = format!("# {key}=");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no footer {key}"))
        .parse()
        .unwrap()
}

const CONSTANT: &str = r#"{"family":"herm-evd:3","kind":"trigpoly","domain":[0,1],
  "data":{"constant":[[1,[0,0.5],0],[[0,-0.5],0.25,0.3],[0,0.3,-1.25]]}}"#;

#[test]
fn diagonalize_rellich() {
    let out = run(&["diagonalize"], &builtin("rellich"));
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(csv.starts_with("# cartanflow v1\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 101);
    let face_col = 3;
    for row in &rows {
        let t: f64 = row[0].parse().unwrap();
        let l1: f64 = row[1].parse().unwrap();
        // the exact gap 2 exp(-1/t^2) against the face tolerance
        if t == 0.0 {
            assert_eq!(row[face_col], "A:{12}");
        } else if 2.0 * (-1.0 / (t * t)).exp() > 1e-5 {
            assert_eq!(row[face_col], "A:{1}{2}", "t = {t}");
        }
        assert!((l1 - (-1.0 / (t * t)).exp()).abs() <= 1e-12 || t == 0.0 && l1 == 0.0);
        assert_eq!(row.last().unwrap(), "ok");
    }
}

#[test]
fn output_is_deterministic() {
    let spec = builtin("kriegl-like");
    for cmd in ["diagonalize", "lift", "check"] {
        let a = run(&[cmd, "--format", "json"], &spec);
        let b = run(&[cmd, "--format", "json"], &spec);
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn malformed_input_exits_1() {
    let bad = scratch("bad.json", "{\"family\": ");
    let out = run(&["diagonalize"], &bad);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let takagi = scratch("takagi.json", r#"{"family":"takagi:3","kind":"trigpoly","data":{}}"#);
    assert_eq!(run(&["diagonalize"], &takagi).status.code(), Some(1));

    let spec = builtin("rellich");
    assert_eq!(run(&["diagonalize", "--grid", "0:2:11"], &spec).status.code(), Some(1));
    assert_eq!(run(&["diagonalize", "--grid", "1:0:11"], &spec).status.code(), Some(1));
    assert_eq!(run(&["diagonalize", "--tol", "cluster=-1"], &spec).status.code(), Some(1));
    assert_eq!(run(&["flow", "--max-step", "0"], &spec).status.code(), Some(1));
}

#[test]
fn constant_path_rows_repeat() {
    let spec = scratch("constant.json", CONSTANT);
    let out = run(&["diagonalize"], &spec);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&stdout(&out));
    for row in &rows {
        assert_eq!(row[1..], rows[0][1..]);
    }

    let out = run(&["flow", "--grid", "0:1:21"], &spec);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let header: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    let u_cols: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with("u_")).collect();
    assert_eq!(u_cols.len(), 2 * 9);
    let rows = data_rows(&csv);
    for row in &rows {
        for &i in &u_cols {
            let a: f64 = row[i].parse().unwrap();
            let b: f64 = rows[0][i].parse().unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn flow_exit_codes() {
    let out = run(&["flow"], &builtin("rotation-flow"));
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert!(footer(&csv, "max_residual_offdiag") <= 1e-6);
    assert_eq!(data_rows(&csv).len(), 101);

    let out = run(&["flow"], &builtin("rellich"));
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("near-singular point at t = "), "{err}");
    let t: f64 = err.split("t = ").nth(1).unwrap().split(':').next().unwrap().parse().unwrap();
    assert!(t.abs() < 0.5);

    let out = run(&["flow", "--grid", "0.3:1:101"], &builtin("rellich"));
    assert_eq!(out.status.code(), Some(0));
    assert!(footer(&stdout(&out), "max_residual_offdiag") <= 1e-6);
}

fn check_json(spec: &PathBuf) -> (Option<i32>, Value) {
    let out = run(&["check", "--format", "json"], spec);
    (out.status.code(), serde_json::from_slice(&out.stdout).unwrap())
}

fn check_named<'a>(summary: &'a Value, name: &str) -> &'a Value {
    summary["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn check_rotation_flow_passes() {
    let (code, summary) = check_json(&builtin("rotation-flow"));
    assert_eq!(code, Some(0));
    assert_eq!(summary["all_pass"], true);
    for c in summary["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass", "{c}");
    }
}

#[test]
fn check_reports_membership_failure() {
    let spec = scratch(
        "asym.json",
        r#"{"family":"real-sym-evd:2","kind":"samples",
            "data":{"times":[0,1],"matrices":[[[1,2],[0,-1]],[[1,0],[0,-1]]]}}"#,
    );
    let (code, summary) = check_json(&spec);
    assert_eq!(code, Some(4));
    assert_eq!(check_named(&summary, "membership")["status"], "fail");
    assert_eq!(check_named(&summary, "lipschitz")["status"], "skip");
    // the other commands reject the same input outright
    assert_eq!(run(&["diagonalize"], &spec).status.code(), Some(1));
}

#[test]
fn check_chamber_cross_lift_kink() {
    let (code, summary) = check_json(&builtin("chamber-cross"));
    assert_eq!(code, Some(0));
    let kink = check_named(&summary, "lift-kink");
    let lifted = kink["value"].as_f64().unwrap();
    let sorted = kink["limit"].as_f64().unwrap() - 1e-9;
    assert!((sorted - 2.0).abs() < 1e-9, "{kink}");
    assert!(lifted < 1e-9, "{kink}");
}

#[test]
fn human_readable_table() {
    let out = run(&["check"], &builtin("chamber-cross"));
    let text = stdout(&out);
    assert!(text.starts_with("check "));
    assert!(text.lines().any(|l| l.starts_with("lift-kink") && l.contains("pass")));
    let last = text.lines().last().unwrap();
    assert!(serde_json::from_str::<Value>(last).is_ok());
}

#[test]
fn lift_and_json_output() {
    let out = run(&["lift", "--format", "json", "--grid", "-1:1:21"], &builtin("chamber-cross"));
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format"], "cartanflow v1");
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 21);
    for s in samples {
        let t = s["t"].as_f64().unwrap();
        let l = s["lambda_lift"].as_array().unwrap();
        assert!((l[0].as_f64().unwrap() + t).abs() < 1e-10);
    }
}

#[test]
fn out_flag_and_stdin() {
    let spec = builtin("rellich");
    let target = spec.with_extension("csv");
    let out = bin()
        .args(["diagonalize", "--out"])
        .arg(&target)
        .arg(&spec)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();

    use std::io::Write;
    let mut child = bin()
        .args(["diagonalize", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(std::fs::read(&spec).unwrap().as_slice())
        .unwrap();
    let piped = child.wait_with_output().unwrap();
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), written);
}

#[test]
fn families_and_corpus() {
    let out = bin().args(["families", "--format", "json"]).output().unwrap();
    let list: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|f| f["family"].as_str().unwrap()).collect();
    for prefix in ["real-sym-evd:", "herm-evd:", "real-svd:", "complex-svd:", "skew-evd:"] {
        assert!(ids.iter().any(|id| id.starts_with(prefix)), "{prefix}");
    }

    let out = bin().arg("corpus").output().unwrap();
    let names = stdout(&out);
    for name in ["rellich", "kriegl-like", "chamber-cross", "rotation-flow"] {
        assert!(names.contains(name));
        let spec = bin().args(["corpus", name]).output().unwrap();
        let path = scratch(&format!("corpus-{name}.json"), &stdout(&spec));
        assert_eq!(run(&["diagonalize", "--grid", "0:0.5:3"], &path).status.code(), Some(0));
    }
    assert_eq!(bin().args(["corpus", "nope"]).output().unwrap().status.code(), Some(1));
}
