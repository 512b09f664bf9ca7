use std::path::Path;
use std::process::{Command, Output};

use stylesim_core::{read_graph_file, ExportFormat, SimilarityGraph};

fn stylesim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stylesim"))
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stylesim(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"
seed = 3
k = 4
[paths]
products = "products.jsonl"
images = "images.jsonl"
votes = "votes.jsonl"
split = "split.json"
checkpoint = "model.json"
embeddings = "emb.jsonl"
graph = "graph.json"
[train]
epochs = 20
learning_rate = 0.05
[graph]
min_group_size = 3
"#;

/// Synthetic catalog plus a config file pointing at it.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    ok(
        dir.path(),
        &["--seed", "3", "synth", "--out", ".", "--num-products", "80"],
    );
    dir
}

#[test]
fn full_pipeline_through_config_file() {
    let dir = workspace();
    let d = dir.path();
    fn with<'a>(extra: &[&'a str]) -> Vec<&'a str> {
        ["--config", "run.toml"]
            .iter()
            .chain(extra)
            .copied()
            .collect()
    }

    let report = ok(d, &with(&["validate"]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["errors"].as_array().unwrap().len(), 0);

    assert_eq!(
        ok(d, &with(&["split"])),
        "train=192\nvalidation=24\ntest=24\n"
    );
    let train = ok(d, &with(&["train"]));
    assert!(train.contains("epochs=20"));
    assert!(d.join("model.history.json").exists());

    let eval = ok(d, &with(&["eval"]));
    let kv: std::collections::BTreeMap<&str, &str> =
        eval.lines().map(|l| l.split_once('=').unwrap()).collect();
    for key in [
        "estimation.accuracy",
        "estimation.modern",
        "estimation.traditional",
        "estimation.cottage",
        "estimation.coastal",
        "retrieval.accuracy",
    ] {
        let v: f64 = kv[key].parse().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key}={v}");
    }
    assert_eq!(kv["retrieval.k"], "4");

    ok(d, &with(&["embed"]));
    ok(d, &with(&["graph", "build"]));
    let graph = SimilarityGraph::load(&d.join("graph.json")).unwrap();
    assert!(graph.node_count() > 0);

    for (fmt, ext, format) in [
        ("graphml", "graphml", ExportFormat::GraphMl),
        ("gexf", "gexf", ExportFormat::Gexf),
        ("csv", "csv", ExportFormat::EdgeCsv),
    ] {
        let out = format!("export.{ext}");
        ok(
            d,
            &with(&["graph", "export", "--format", fmt, "--out", &out]),
        );
        let back = read_graph_file(&d.join(&out), format).unwrap();
        assert!(graph.same_structure(&back), "{fmt}");
    }

    let rec: serde_json::Value =
        serde_json::from_str(&ok(d, &with(&["recommend", "--sku", "P0001"]))).unwrap();
    assert_eq!(rec["neighbors"].as_array().unwrap().len(), 4);
    let rec: serde_json::Value = serde_json::from_str(&ok(
        d,
        &with(&["recommend", "--image", "img00001", "--k", "2"]),
    ))
    .unwrap();
    assert_eq!(rec["neighbors"].as_array().unwrap().len(), 2);

    let features = vec!["0.5"; 16].join(",");
    let score: serde_json::Value =
        serde_json::from_str(&ok(d, &with(&["score", "--features", &features]))).unwrap();
    let probs: f64 = score["style_probs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["probability"].as_f64().unwrap())
        .sum();
    assert!((probs - 1.0).abs() < 1e-12);
    std::fs::write(d.join("design.json"), format!("[{features}]")).unwrap();
    let from_file: serde_json::Value =
        serde_json::from_str(&ok(d, &with(&["score", "--features-file", "design.json"]))).unwrap();
    assert_eq!(score, from_file);

    let gaps: serde_json::Value = serde_json::from_str(&ok(d, &with(&["gaps"]))).unwrap();
    let counted: u64 = gaps["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["node_count"].as_u64().unwrap())
        .sum();
    assert_eq!(counted as usize, graph.node_count());
}

#[test]
fn training_twice_gives_identical_checkpoints() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["--config", "run.toml", "split"]);
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "--seed",
            "7",
            "--epochs",
            "3",
            "train",
            "--checkpoint",
            "a.json",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "--seed",
            "7",
            "--epochs",
            "3",
            "train",
            "--checkpoint",
            "b.json",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "--seed",
            "8",
            "--epochs",
            "3",
            "train",
            "--checkpoint",
            "c.json",
        ],
    );
    let a = std::fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.json")).unwrap());
    assert_ne!(a, std::fs::read(d.join("c.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["--config", "run.toml", "split"]);
    ok(d, &["--config", "run.toml", "--epochs", "1", "train"]);
    ok(d, &["--config", "run.toml", "embed"]);

    let out = stylesim(
        d,
        &["--config", "run.toml", "recommend", "--sku", "UNKNOWN"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("UNKNOWN"));

    let out = stylesim(
        d,
        &[
            "--config",
            "run.toml",
            "--checkpoint",
            "missing.json",
            "eval",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = stylesim(d, &["--config", "run.toml", "score", "--features", "1,2"]);
    assert_eq!(out.status.code(), Some(2), "graph not built yet");

    ok(d, &["--config", "run.toml", "graph", "build"]);
    let out = stylesim(d, &["--config", "run.toml", "score", "--features", "1,2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 16"));

    let out = stylesim(
        d,
        &[
            "--config", "run.toml", "graph", "export", "--format", "dot", "--out", "x",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = stylesim(
        d,
        &[
            "--config", "run.toml", "--wmin", "5", "--wmax", "2", "graph", "build",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = stylesim(d, &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(
        d.join("bad.jsonl"),
        "{\"sku\": \"A\", \"group\": \"G\"}\n{\"sku\": \"A\", \"group\": \"G\"}\n",
    )
    .unwrap();
    let out = stylesim(
        d,
        &[
            "--config",
            "run.toml",
            "--products",
            "bad.jsonl",
            "validate",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!report["errors"].as_array().unwrap().is_empty());

    let out = stylesim(d, &["split"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--products"));
}
