use std::path::Path;
use std::process::{Command, Output};

use knowledge_core::funding::{optimize_myopic, FundingParams, RewardTech};

fn kcreate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcreate")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV emitted by the tool, after its comment line and header.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# kcreate "), "missing comment line: {comment}");
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn value_of_single_point_is_q() {
    let (h, body) = rows(&stdout(&kcreate(&["value", "--q", "2"])));
    let total = body.iter().find(|r| r[0] == "total").unwrap();
    assert_eq!(total[col(&h, "value")].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn value_per_area() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "k.json", r#"{"points":[{"x":0,"y":0},{"x":6,"y":1}]}"#);
    let (h, body) = rows(&stdout(&kcreate(&["value", "--knowledge", &f])));
    let v = col(&h, "value");
    let bounded: f64 = body.iter().find(|r| r[0] == "bounded-0").unwrap()[v].parse().unwrap();
    let total: f64 = body.iter().find(|r| r[0] == "total").unwrap()[v].parse().unwrap();
    assert!((total - 1.0 - bounded).abs() < 1e-15);
}

#[test]
fn expansion_curve_matches_formula() {
    let (h, body) = rows(&stdout(&kcreate(&["benefit", "--x", "inf", "--points", "50"])));
    assert_eq!(body.len(), 50);
    for r in &body {
        let d: f64 = r[col(&h, "d")].parse().unwrap();
        let b: f64 = r[col(&h, "benefit")].parse().unwrap();
        let extra = if d > 4.0 { (d - 4.0) / 6.0 * d.sqrt() * (d - 4.0).sqrt() } else { 0.0 };
        assert!((b - (d - d * d / 6.0 + extra)).abs() < 1e-13);
    }
}

#[test]
fn bad_inputs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", r#"{"points": "nope"}"#);
    let o = kcreate(&["value", "--knowledge", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    assert_eq!(kcreate(&["value", "--knowledge", "/does/not/exist.json"]).status.code(), Some(2));
    assert_eq!(kcreate(&["simulate", "--periods", "0"]).status.code(), Some(2));
    assert_eq!(kcreate(&["choose", "--eta", "-1"]).status.code(), Some(2));
    assert_eq!(kcreate(&["funding", "--K", "3", "--kappa", "2"]).status.code(), Some(2));
    assert_eq!(kcreate(&["moonshot", "--mode", "paper", "--series", "x-hat"]).status.code(), Some(2));
}

#[test]
fn choose_from_single_point() {
    let j = json(&kcreate(&["choose"]));
    assert_eq!(j["action"]["kind"], "expand");
    assert!((j["d"].as_f64().unwrap() - 2.09168005).abs() < 1e-7);
    assert!((j["rho"].as_f64().unwrap() - 0.35893481).abs() < 1e-7);
    let j = json(&kcreate(&["choose", "--eta", "0"]));
    assert_eq!(j["d"].as_f64().unwrap(), 3.0);
    assert_eq!(j["rho"].as_f64().unwrap(), 1.0);
}

#[test]
fn deepening_curve() {
    let (h, body) = rows(&stdout(&kcreate(&["choose", "--curve", "--x-max", "12", "--points", "24"])));
    assert_eq!(body.len(), 24);
    let x6 = body.iter().find(|r| r[col(&h, "X")].parse::<f64>().unwrap() == 6.0).unwrap();
    assert!((x6[col(&h, "rho")].parse::<f64>().unwrap() - 0.54321953).abs() < 1e-7);
}

#[test]
fn cutoffs_report() {
    let j = json(&kcreate(&["cutoffs"]));
    assert!((j["researcher"]["x_dot"].as_f64().unwrap() - 4.5486).abs() < 1e-4);
    assert!((j["benefit"]["x_check0"].as_f64().unwrap() - 6.2044496221).abs() < 1e-9);
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = kcreate(&["simulate", "--periods", "50", "--seed", "11", "-o", p.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).contains("final value"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn forced_moonshot_pattern() {
    let text = stdout(&kcreate(&["simulate", "--periods", "3", "--force-success", "--first-distance", "6"]));
    let xs: Vec<f64> =
        text.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["x"].as_f64().unwrap()).collect();
    assert_eq!(xs.len(), 3);
    assert_eq!(xs[0], 6.0);
    assert!((xs[1] - 3.0).abs() < 1e-12);
    assert!((xs[2] - 8.09168005).abs() < 1e-7);
}

#[test]
fn paper_mode_quadruple() {
    let (h, body) = rows(&stdout(&kcreate(&["moonshot", "--mode", "paper", "--eta", "1"])));
    let r = &body[0];
    let get = |n: &str| r[col(&h, n)].parse::<f64>().unwrap();
    assert!((get("d_inf") - 2.74272).abs() < 1e-5);
    assert!((get("rho_inf") - 0.31075).abs() < 1e-5);
    assert!((get("rho_6q") - 0.453226).abs() < 1e-6);
    assert!((get("benefit_delta1") - 0.0283413).abs() < 1e-7);
}

#[test]
fn moonshot_summary_and_series() {
    let j = json(&kcreate(&["moonshot", "--delta", "0.9"]));
    let x = j["optimal"]["x_hat"].as_f64().unwrap();
    assert!(x > 5.0 && x < 6.0);
    let (h, body) = rows(&stdout(&kcreate(&["moonshot", "--series", "delta", "--points", "12"])));
    let first: f64 = body[0][col(&h, "flow_benefit")].parse().unwrap();
    let last: f64 = body[11][col(&h, "flow_benefit")].parse().unwrap();
    assert!(first < 0.0 && last > 0.0);
}

#[test]
fn myopic_funding_mix() {
    let out = stdout(&kcreate(&[
        "funding", "--K", "3", "--kappa", "16", "--s", "6", "--eta0", "1", "--delta", "0", "--points", "40",
    ]));
    let (h, body) = rows(&out);
    let scheme = body.iter().find(|r| r[0] == "scheme").unwrap();
    assert_eq!(scheme[col(&h, "kind")], "mix");
    let d: f64 = scheme[col(&h, "d")].parse().unwrap();
    assert!(d > 3.0 && d < 6.0);
    let fp = FundingParams::new(3.0, 16.0, 6.0, 1.0, RewardTech::PiecewiseLinear).unwrap();
    let m = optimize_myopic(&fp, 1.0).unwrap();
    assert_eq!(scheme[col(&h, "zeta")].parse::<f64>().unwrap(), m.scheme.zeta);
    for series in ["budget-line", "frontier", "indifference"] {
        assert!(body.iter().any(|r| r[0] == series), "no {series} rows");
    }
}

#[test]
fn config_precedence_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let toml = write(dir.path(), "run.toml", "eta = 0.0\nq = 1.0\n");
    let j = json(&kcreate(&["choose", "--config", &toml]));
    assert_eq!(j["d"].as_f64().unwrap(), 3.0);
    let j = json(&kcreate(&["choose", "--config", &toml, "--eta", "1"]));
    assert!((j["d"].as_f64().unwrap() - 2.09168005).abs() < 1e-7);
    let cfg = write(dir.path(), "run.json", r#"{"q": 1.5, "points": 30}"#);
    let a = stdout(&kcreate(&["benefit", "--x", "7", "--config", &cfg]));
    let b = stdout(&kcreate(&["benefit", "--x", "7", "--config", &cfg]));
    assert_eq!(a, b);
    assert!(a.lines().next().unwrap().contains("\"q\":1.5"));
    assert_eq!(rows(&a).1.len(), 30);
    let bad = write(dir.path(), "bad.toml", "etta = 1\n");
    assert_eq!(kcreate(&["choose", "--config", &bad]).status.code(), Some(2));
}
