use salience::models::ModelKind;
use salience::training::{compare_models, read_cells};
use salience_cli::manifest::read_manifests;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_salience");

pub const SMALL: &str = r#"
seed = 11

[simulate]
n_per_object = 40
pilot_size = 200

[train]
max_epochs = 4
patience = 2
batch_size = 64

[tune]
budget = 3
models = ["mlp", "rnn"]

[tune.space]
layers = [1]
units = [8]
emb_dim = [4]
lr = [1e-3, 3e-4]

[crossval]
folds = 3

[embed]
steps = 2
max_points = 120
pca_components = 4
transducer_units = 3
n_neighbors = 10
epochs = 30

[partition]
step = 2
n_init = 3
max_epochs = 20
"#;

fn salience(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .args(["--config", dir.join("config.toml").to_str().unwrap(), "--workdir", dir.join("run").to_str().unwrap()])
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), SMALL).unwrap();
    dir
}

fn ok(dir: &Path, args: &[&str]) {
    let out = salience(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_byte_identical_for_one_seed() {
    let (a, b) = (setup(), setup());
    ok(a.path(), &["simulate"]);
    ok(b.path(), &["simulate"]);
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("run/dataset.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = setup();
    ok(c.path(), &["simulate", "--seed", "12"]);
    assert_ne!(read(&a), read(&c));
    let m = read_manifests(&a.path().join("run")).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].subcommand, "simulate");
    assert_eq!(m[0].seed, 11);
}

#[test]
fn crossval_report_matches_direct_aggregation() {
    let d = setup();
    for step in ["simulate", "prepare", "crossval", "report"] {
        ok(d.path(), &[step]);
    }
    let run = d.path().join("run");
    let cells = read_cells(std::fs::File::open(run.join("cells.csv")).unwrap()).unwrap();
    let ranking: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("ranking.json")).unwrap()).unwrap();
    // Global metric per fold: mean over targets of the per-target cell mean.
    for entry in ranking["ranking"].as_array().unwrap() {
        let model: ModelKind = serde_json::from_value(entry["model"].clone()).unwrap();
        let mut per_fold = Vec::new();
        for f in 0..3 {
            let mut total = 0.0;
            for t in salience::data::TARGET_NAMES {
                let v: Vec<f64> = cells.iter().filter(|c| c.model == model && c.fold == f && c.target == t).map(|c| c.smape).collect();
                total += v.iter().sum::<f64>() / v.len() as f64;
            }
            per_fold.push(total / 5.0);
        }
        let direct = per_fold.iter().sum::<f64>() / 3.0;
        assert!((entry["mean_global"].as_f64().unwrap() - direct).abs() < 1e-9);
    }
    assert_eq!(compare_models(&cells, None).unwrap().ranking.len(), 5);
    assert_eq!(read_manifests(&run).unwrap().len(), 4);
}

#[test]
fn unknown_subcommand_prints_usage_and_fails() {
    let out = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).to_lowercase().contains("usage"));
}

#[test]
fn errors_carry_exit_codes() {
    let d = setup();
    // Missing inputs are data errors.
    let out = salience(d.path(), &["prepare"]);
    assert_eq!(out.status.code(), Some(3));
    let line = String::from_utf8_lossy(&out.stderr);
    assert!(line.lines().any(|l| l.starts_with("error code=3 kind=data")), "{line}");
    // Bad config values are config errors.
    std::fs::write(d.path().join("config.toml"), "[prepare]\ntuning_fraction = 2.0\n").unwrap();
    assert_eq!(salience(d.path(), &["simulate"]).status.code(), Some(2));
    std::fs::write(d.path().join("config.toml"), "[prepare]\nnot_a_key = 1\n").unwrap();
    assert_eq!(salience(d.path(), &["simulate"]).status.code(), Some(2));
}

#[test]
fn full_pipeline_runs_and_is_reproducible() {
    let (a, b) = (setup(), setup());
    let steps: [&[&str]; 8] = [
        &["simulate"],
        &["prepare"],
        &["tune"],
        &["crossval"],
        &["train", "--model", "rnn"],
        &["encode", "--model", "rnn"],
        &["embed", "--model", "rnn"],
        &["partition", "--model", "rnn", "--jobs", "1"],
    ];
    for d in [&a, &b] {
        for s in steps {
            ok(d.path(), s);
        }
    }
    for f in ["dataset.csv", "cells.csv", "embedding_rnn.csv", "tuned.json", "profiles_rnn.csv", "pca_rnn.csv", "transducers_rnn.csv"] {
        let x = std::fs::read(a.path().join("run").join(f)).unwrap();
        let y = std::fs::read(b.path().join("run").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
    assert!(a.path().join("run/trajectories_rnn.svg").exists());
    assert_eq!(salience(a.path(), &["encode", "--model", "elastic_net"]).status.code(), Some(2));
}
