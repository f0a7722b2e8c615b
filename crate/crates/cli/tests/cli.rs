use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).to_str().unwrap().to_string()
}

fn tilelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilelab")).args(args).env("SOURCE_DATE_EPOCH", "1700000000").output().unwrap()
}

fn path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn json(p: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn validate_reports_named_checks() {
    let out = tilelab(&["validate", &fixture("four1d.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);

    for (name, check) in [("broken_nonuniform.toml", "uniform scaling"), ("broken_origin.toml", "shared attractor"), ("broken_overlap.toml", "compatibility")] {
        let out = tilelab(&["validate", &fixture(name)]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(String::from_utf8(out.stdout).unwrap().contains(&format!("FAIL {check}")));
    }
}

#[test]
fn invalid_family_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = tilelab(&["expand", &fixture("broken_overlap.toml"), "--word", "1", "--depth", "1", "--out", &path(&dir, "p.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
    let out = tilelab(&["lyapunov", "/nonexistent.toml", "--law", "fixed:1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let four = fixture("four1d.toml");
    assert_eq!(tilelab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tilelab(&["lyapunov", &four, "--law", "uniform:1"]).status.code(), Some(2));
    assert_eq!(tilelab(&["lyapunov", &four, "--law", "fixed:7"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "d.json");
    assert_eq!(tilelab(&["deviate", &four, "--beta", "1,-1", "--region", "box:0,0,1,1", "--out", &out]).status.code(), Some(2));
    assert_eq!(tilelab(&["deviate", &four, "--beta", "1,x", "--region", "interval:0,1", "--out", &out]).status.code(), Some(2));
    assert_eq!(tilelab(&["deviate", &four, "--beta", "1,-1,0", "--region", "interval:0,1", "--out", &out]).status.code(), Some(2));
    assert_eq!(tilelab(&["expand", &four, "--depth", "2", "--out", &out]).status.code(), Some(2));
    assert_eq!(tilelab(&["expand", &four, "--word", "1", "--depth", "2", "--policy", "middle", "--out", &out]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(&dir, "empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = tilelab(&["render", &empty, "--family", &fixture("four1d.toml"), "--out", &path(&dir, "e.svg")]);
    assert_eq!(out.status.code(), Some(3));
    // a mean-carrying observable is rejected
    let out = tilelab(&["deviate", &fixture("four1d.toml"), "--beta", "1,1", "--region", "interval:0,1", "--out", &path(&dir, "d.json")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn expand_and_render_strip() {
    let dir = tempfile::tempdir().unwrap();
    let patch = path(&dir, "p.jsonl");
    let out = tilelab(&["expand", &fixture("four1d.toml"), "--word", "111", "--depth", "3", "--out", &patch]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&patch).unwrap().lines().count(), 64);
    assert!(Path::new(&format!("{patch}.manifest.json")).exists());

    let svg = path(&dir, "p.svg");
    assert_eq!(tilelab(&["render", &patch, "--family", &fixture("four1d.toml"), "--out", &svg]).status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<rect").count(), 64);
    assert!(text.contains(r#"viewBox="-0.5 -0.5 64 1""#));
}

#[test]
fn render_single_square() {
    let dir = tempfile::tempdir().unwrap();
    let patch = path(&dir, "one.jsonl");
    std::fs::write(&patch, "{\"proto\":\"a.a\",\"collared\":null,\"x\":[0.0,0.0]}\n").unwrap();
    let svg = path(&dir, "one.svg");
    assert_eq!(tilelab(&["render", &patch, "--family", &fixture("prod2d.toml"), "--out", &svg]).status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains(r#"viewBox="-0.5 -0.5 1 1""#));
    assert_eq!(text.matches("<polygon").count(), 1);
}

#[test]
fn product_patch_has_four_colours() {
    let dir = tempfile::tempdir().unwrap();
    let patch = path(&dir, "p.jsonl");
    tilelab(&["expand", &fixture("prod2d.toml"), "--word", "1", "--depth", "1", "--out", &patch]);
    let svg = path(&dir, "p.svg");
    tilelab(&["render", &patch, "--family", &fixture("prod2d.toml"), "--out", &svg]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polygon").count(), 16);
    let fills: std::collections::BTreeSet<&str> = text.split("fill=\"").skip(1).map(|s| &s[..7]).collect();
    assert_eq!(fills.len(), 4);
}

#[test]
fn collared_expand_labels_every_tile() {
    let dir = tempfile::tempdir().unwrap();
    let patch = path(&dir, "c.jsonl");
    let out = tilelab(&["expand", &fixture("four1d.toml"), "--law", "bernoulli:0.5,0.5", "--seed", "4", "--depth", "3", "--collared", "--out", &patch]);
    assert_eq!(out.status.code(), Some(0));
    for line in std::fs::read_to_string(&patch).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["collared"].is_u64());
    }
}

#[test]
fn lyapunov_fixed_word() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "l.json");
    assert_eq!(tilelab(&["lyapunov", &fixture("four1d.toml"), "--law", "fixed:1", "--out", &out]).status.code(), Some(0));
    let v = json(&out);
    let ex: Vec<f64> = v["report"]["exponents"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((ex[0] - 4f64.ln()).abs() < 1e-6 && (ex[1] - 2f64.ln()).abs() < 1e-6);
    assert_eq!(v["manifest"]["command"], "lyapunov");
    assert_eq!(v["manifest"]["timestamp"], 1700000000);
    assert_eq!(v["manifest"]["family_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn deviate_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "dev.json");
    let run = tilelab(&["deviate", &fixture("four1d.toml"), "--beta", "1,-1", "--region", "interval:0,1", "--out", &out]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8(run.stdout).unwrap().starts_with("PASS"));
    let v = json(&out);
    assert!((v["report"]["predicted"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let csv: PathBuf = dir.path().join("dev.csv");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 20);
    assert!(dir.path().join("dev.csv.manifest.json").exists());
}

#[test]
fn freqs_boundary_and_product() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(&dir, "f.json");
    assert_eq!(tilelab(&["freqs", &fixture("fib1d.toml"), "--law", "fixed:1", "--depths", "20", "--out", &f]).status.code(), Some(0));
    let a = json(&f)["report"]["frequencies"][0][0].as_f64().unwrap();
    assert!((a - 2.0 / (1.0 + 5f64.sqrt())).abs() < 1e-3);

    let b = path(&dir, "b.json");
    assert_eq!(tilelab(&["boundary", &fixture("four1d.toml"), "--law", "fixed:1", "--samples", "4000", "--out", &b]).status.code(), Some(0));
    assert!(json(&b)["report"]["rate"].as_f64().unwrap() < 0.75);

    let p = path(&dir, "p.toml");
    assert_eq!(tilelab(&["product", &fixture("four1d.toml"), &fixture("four1d.toml"), "--out", &p]).status.code(), Some(0));
    assert_eq!(tilelab(&["validate", &p]).status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "l.json");
    let args = ["lyapunov", &fixture("prod2d.toml"), "--law", "bernoulli:0.5,0.5", "--samples", "6", "--seed", "9", "--out", &out];
    tilelab(&args);
    let first = std::fs::read(&out).unwrap();
    let again = Command::new(env!("CARGO_BIN_EXE_tilelab")).args(args).env("SOURCE_DATE_EPOCH", "1700000000").env("TILELAB_THREADS", "3").output().unwrap();
    assert!(again.status.success());
    assert_eq!(first, std::fs::read(&out).unwrap());
}
