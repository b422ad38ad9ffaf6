//! Runs the `vizkb` binary with its in-process service.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vizkb_core::augment::{builtin_seeds, Label};
use vizkb_core::kb::{FeatureCatalog, WeightTable};
use vizkb_core::labeling::LabelRecord;

fn vizkb(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_vizkb"))
        .current_dir(dir)
        .env_remove("VIZKB_SERVER")
        .env_remove("VIZKB_CONFIG")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "vizkb {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn summary(text: &[u8]) -> Value {
    let line = String::from_utf8_lossy(text).lines().last().unwrap_or_default().to_string();
    serde_json::from_str(&line).unwrap_or_else(|e| panic!("summary `{line}`: {e}"))
}

#[test]
fn seed_corpus_train_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let catalog = FeatureCatalog::builtin();
    fs::write(dir.join("seeds.json"), serde_json::to_string(&builtin_seeds()).unwrap()).unwrap();
    fs::write(dir.join("builtin.csv"), WeightTable::builtin(&catalog).to_csv()).unwrap();

    let args = [
        "augment", "seed", "--specs", "seeds.json", "--weights", "builtin.csv", "--top", "8", "--out",
    ];
    let out = vizkb(dir, &[&args[..], &["corpus.jsonl"]].concat());
    let s = summary(&out.stdout);
    assert_eq!((s["ok"].as_bool(), s["pairs"].as_u64()), (Some(true), Some(280)));
    let corpus = fs::read(dir.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.iter().filter(|&&b| b == b'\n').count(), 280);
    let meta: Value = serde_json::from_slice(&fs::read(dir.join("corpus.jsonl.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);

    // same inputs and seed give the same bytes
    vizkb(dir, &[&args[..], &["again.jsonl"]].concat());
    assert_eq!(fs::read(dir.join("again.jsonl")).unwrap(), corpus);

    vizkb(dir, &["train", "--pairs", "corpus.jsonl", "--out", "learned.csv", "--coefficients", "coef.json"]);
    let learned = WeightTable::from_csv(
        &fs::read_to_string(dir.join("learned.csv")).unwrap(),
        vizkb_core::kb::WeightProvenance::Learned,
    )
    .unwrap();
    assert_eq!(learned.weights.len(), catalog.len());
    let out = vizkb(dir, &["eval", "--pairs", "corpus.jsonl", "--weights", "learned.csv", "--out", "eval.json"]);
    let s = summary(&out.stdout);
    assert!(s["accuracy"].as_f64().unwrap() >= 0.95, "{s}");
}

#[test]
fn coverage_of_empty_corpus_lists_every_feature() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vizkb(tmp.path(), &["coverage", "--threshold", "7"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let listed = report["under_covered"].as_array().unwrap().len();
    assert_eq!(listed, FeatureCatalog::builtin().len());
    // without --out the summary goes to stderr
    assert_eq!(summary(&out.stderr)["under_covered"].as_u64(), Some(listed as u64));
}

#[test]
fn label_import_export_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("vizkb.toml"), "[paths]\nlabels = \"store\"\n").unwrap();
    let lines = [
        serde_json::to_string(&LabelRecord::manual("a", Label::Left).without_timestamp()).unwrap(),
        serde_json::to_string(&LabelRecord::manual("b", Label::Right)).unwrap(),
        r#"{"pair_id":"b","illegible":true}"#.to_string(),
    ];
    fs::write(dir.join("labels.jsonl"), lines.join("\n") + "\n").unwrap();
    let out = vizkb(dir, &["--config", "vizkb.toml", "label", "import", "--labels", "labels.jsonl"]);
    assert_eq!(summary(&out.stderr)["imported"].as_u64(), Some(3));

    let out = vizkb(dir, &["--config", "vizkb.toml", "--no-timestamps", "label", "export", "-o", "x.jsonl"]);
    assert_eq!(summary(&out.stdout)["records"].as_u64(), Some(1));
    let exported = fs::read_to_string(dir.join("x.jsonl")).unwrap();
    assert_eq!(exported, lines[0].clone() + "\n");
}

#[test]
fn errors_exit_nonzero_with_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vizkb"))
        .current_dir(tmp.path())
        .args(["eval", "--pairs", "missing.jsonl"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let s = summary(&out.stderr);
    assert_eq!(s["ok"], false);
    assert!(s["error"].as_str().unwrap().contains("missing.jsonl"));
}
