use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPORT: &[&str] = &["ball", "goal", "team", "match", "score", "coach"];
const FOOD: &[&str] = &["bread", "oven", "flour", "sugar", "recipe", "butter"];

/// Writes a 16-document two-topic dataset and a config pointing at it.
fn setup(dir: &Path, extra: &str) -> std::path::PathBuf {
    let mut meta = String::new();
    let mut text = String::new();
    for i in 0..16 {
        let (label, words) = if i % 2 == 0 {
            ("sport", SPORT)
        } else {
            ("food", FOOD)
        };
        let split = if i % 4 == 3 { "test" } else { "train" };
        meta.push_str(&format!("d{i}\t{split}\t{label}\n"));
        let doc: Vec<&str> = (0..5).map(|k| words[(i + k * 2) % words.len()]).collect();
        text.push_str(&doc.join(" "));
        text.push('\n');
    }
    fs::write(dir.join("toy.txt"), meta).unwrap();
    fs::write(dir.join("toy_corpus.txt"), text).unwrap();
    let config = format!(
        r#"{{
  "dataset": "toy",
  "meta_path": "toy.txt",
  "text_path": "toy_corpus.txt",
  "n_repeats": 1,
  "train": {{"hidden_dim": 8, "max_epochs": 20}}{extra}
}}"#
    );
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    path
}

fn textgcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_textgcn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_graph_writes_coo_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    let out = dir.path().join("out");
    let o = textgcn(&[
        "build-graph",
        "--config",
        s(&config),
        "--edges",
        "d2w",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let graph = fs::read_to_string(out.join("graphs/graph_d2w.txt")).unwrap();
    assert!(graph.starts_with("# "));
    assert!(graph.lines().nth(1).unwrap().starts_with("COO "));
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    let out = dir.path().join("run");
    let o = textgcn(&[
        "train",
        "--config",
        s(&config),
        "--layers",
        "2",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("model.ckpt").is_file());
    assert!(out.join("history.json").is_file());

    let o = textgcn(&["evaluate", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let eval: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(eval["macro_f1"].is_number() && eval["weighted_f1"].is_number());
}

#[test]
fn sweep_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), r#", "sweep": {"n_layers": [1, 2]}"#);
    let out = dir.path().join("sweep");
    let o = textgcn(&[
        "sweep",
        "--config",
        s(&config),
        "--edges",
        "d2w,d2w_w2w",
        "--jobs",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 4);
    let table = fs::read_to_string(out.join("table_edge_config_n_layers.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let curve = fs::read_to_string(out.join("curve_n_layers.csv")).unwrap();
    assert_eq!(curve.lines().count(), 5);
}

#[test]
fn partial_and_total_failure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    let out = dir.path().join("partial");
    // A training fraction of 1 leaves no test documents for that cell.
    let o = textgcn(&[
        "sweep",
        "--config",
        s(&config),
        "--train-fraction",
        "0.5,1.0",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("report.json").is_file());

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"meta_path": "missing.txt", "text_path": "missing.txt", "n_repeats": 1}"#,
    )
    .unwrap();
    let o = textgcn(&[
        "sweep",
        "--config",
        s(&bad),
        "--out",
        s(&dir.path().join("total")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn list_overrides_rejected_outside_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path(), "");
    let o = textgcn(&["train", "--config", s(&config), "--layers", "1,2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("single value"));
}
