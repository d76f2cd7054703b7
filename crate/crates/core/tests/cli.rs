use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheeger-lab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn solve_square_eigenvalue() {
    let out = lab(&["solve", "--domain", "square", "--n", "256", "--p", "2", "--q", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((lambda - 2.0 * PI * PI).abs() < 0.01 * 2.0 * PI * PI, "{lambda}");
    assert_eq!(v["converged"], Value::Bool(true));
    assert_eq!(v["n"], 256);
}

#[test]
fn cheeger_disk_by_tv() {
    let out = lab(&["cheeger", "--domain", "disk", "--r", "1", "--n", "256", "--method", "tv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let h = v["h"].as_f64().unwrap();
    assert!((h - 2.0).abs() < 0.04, "{h}");
    assert_eq!(v["method"], "tv_bisection");
    assert!(v["lo"].as_f64().unwrap() <= h && h <= v["hi"].as_f64().unwrap());
}

#[test]
fn cheeger_on_a_mask_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rect.txt");
    let mut text = String::from("42 22 0.05\n");
    for j in 0..22 {
        let row: String = (0..42).map(|i| if (1..41).contains(&i) && (1..21).contains(&j) { '1' } else { '0' }).collect();
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    let domain = format!("mask:{}", path.display());
    // convexity of a raster is not known, so only the TV route applies
    assert_eq!(code(&lab(&["cheeger", "--domain", &domain])), 2);
    let out = lab(&["cheeger", "--domain", &domain, "--method", "tv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let h = json(&out)["h"].as_f64().unwrap();
    let exact = (4.0 - PI) / (3.0 - (1.0 + 2.0 * PI).sqrt());
    assert!((h - exact).abs() < 0.1 * exact, "{h} vs {exact}");
}

#[test]
fn sweep_csv_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--domain".into(),
            "square".into(),
            "--n".into(),
            "48".into(),
            "--path".into(),
            "one".into(),
            "--p-list".into(),
            "1.6,1.4,1.2,1.1,1.05".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    for out in [&a, &b] {
        let argv = args(out);
        let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(code(&lab(&refs)), 0);
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,q,lambda,l1,linf,linf_pow,lane_emden_q_pow,residual,iterations");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let lambda: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(lambda > 0.0 && lambda.is_finite());
    }
}

#[test]
fn sweep_with_explicit_q_list() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("q.txt");
    fs::write(&list, "0.9, 1.0\n1.1\n").unwrap();
    let out = lab(&["sweep", "--n", "24", "--path", &format!("list:{}", list.display()), "--p-list", "1.6,1.4,1.2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let qs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(qs, ["0.9", "1.0", "1.1"]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"domain": "square", "n": 32, "p": 1.5, "q": 1.5}"#).unwrap();
    let cfg = cfg.display().to_string();
    let base = json(&lab(&["solve", "--config", &cfg]));
    assert_eq!(base["p"], 1.5);
    assert_eq!(base["n"], 32);
    let over = json(&lab(&["solve", "--config", &cfg, "--q", "1"]));
    assert_eq!(over["p"], 1.5);
    assert_eq!(over["q"], 1.0);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"n": 32, "colour": "red"}"#).unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["solve".into(), "--config".into(), cfg.display().to_string()],
        vec!["solve".into(), "--domain".into(), "hexagon".into()],
        vec!["solve".into(), "--p".into(), "1.2".into(), "--q".into(), "5".into()],
        vec!["solve".into(), "--method".into(), "tv".into()],
        vec!["cheeger".into(), "--domain".into(), "lshape".into(), "--n".into(), "32".into()],
        vec!["cheeger".into(), "--method".into(), "simplex".into()],
        vec!["sweep".into(), "--p-list".into(), "1.2,1.4".into()],
        vec!["sweep".into(), "--path".into(), "pow:x".into()],
        vec!["verify".into(), "--tol".into(), "0.1".into()],
        vec!["solve".into(), "--domain".into(), "mask:/nonexistent/mask.txt".into()],
        vec!["frobnicate".into()],
    ];
    for argv in cases {
        let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
        let out = lab(&refs);
        assert_eq!(code(&out), 2, "{argv:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&lab(&["--help"])), 0);
    assert_eq!(code(&lab(&["--version"])), 0);
    assert_eq!(code(&lab(&["sweep", "--help"])), 0);
}

#[test]
fn verify_is_deterministic_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut stderr = String::new();
    for d in [&a, &b] {
        let out = lab(&["verify", "--n", "24", "--out", &d.display().to_string()]);
        // the coarse grid misses several resolution-bound criteria
        assert_eq!(code(&out), 1);
        stderr = String::from_utf8(out.stderr).unwrap();
    }
    let verdicts: Vec<&str> = stderr.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(verdicts.len(), 12);
    let mut names: Vec<String> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let report: Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 12);
    assert_eq!(report["config"]["sweep_n"], 24);
}
