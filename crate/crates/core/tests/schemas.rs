use std::path::{Path, PathBuf};
use std::process::Command;

use mlbalance::dataset::{write_arff, write_mulan_xml};
use mlbalance::synthetic::{generate, SyntheticSpec};
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let text = std::fs::read_to_string(&path).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn check(name: &str, doc: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn cli(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_mlbalance"))
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn toy(dir: &Path) -> String {
    let ds = generate(&SyntheticSpec {
        n: 90,
        seed: 4,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let arff = dir.join("toy.arff");
    std::fs::write(&arff, write_arff(&ds)).unwrap();
    std::fs::write(dir.join("toy.xml"), write_mulan_xml(&ds)).unwrap();
    arff.to_str().unwrap().to_string()
}

#[test]
fn outputs_match_shipped_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let i = input.as_str();
    check("measure", &cli(&["measure", "--in", i, "--sensitivity", "5,6"]));
    check("inspect", &cli(&["inspect", "--in", i]));
    check(
        "evaluate",
        &cli(&["evaluate", "--in", i, "--folds", "2", "--repeats", "1", "--seed", "1"]),
    );
    check(
        "evaluate",
        &cli(&[
            "evaluate",
            "--in",
            i,
            "--method",
            "mlul",
            "--learner",
            "mlknn",
            "--folds",
            "2",
            "--repeats",
            "1",
            "--seed",
            "1",
        ]),
    );
    check(
        "ensemble",
        &cli(&[
            "ensemble",
            "--in",
            i,
            "--members",
            "2",
            "--diversify",
            "k",
            "--folds",
            "2",
            "--repeats",
            "1",
            "--seed",
            "1",
        ]),
    );
    check(
        "correlate",
        &cli(&[
            "correlate",
            "--in",
            i,
            "--synthetic",
            "3",
            "--synthetic-n",
            "100",
            "--folds",
            "2",
            "--repeats",
            "1",
            "--seed",
            "1",
        ]),
    );
    for method in ["mlsol", "mlul", "mlros", "mlrus"] {
        let out = dir.path().join(format!("{method}.arff"));
        cli_status(&[
            "sample",
            "--in",
            i,
            "--method",
            method,
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        let text = std::fs::read_to_string(format!("{}.provenance.json", out.display())).unwrap();
        check("provenance", &serde_json::from_str(&text).unwrap());
    }
}

fn cli_status(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_mlbalance"))
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn schemas_reject_malformed_documents() {
    check(
        "measure",
        &serde_json::json!({
            "labels": ["a"], "n": 3, "d": 1, "q": 1, "k": 1,
            "per_label": {"irlbl": [1.0], "imr": [2.0]},
            "mean_ir": 1.0, "cvir": 0.0, "mean_imr": 2.0, "cvimr": 0.0, "scumble": 0.0, "limb": 0.5
        }),
    );
    let bad = serde_json::json!({"labels": ["a"], "n": 3, "limb": 1.5});
    assert!(!schema("measure").is_valid(&bad));
}
