use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trie_core::model::{save_model, ModelFile};
use trie_core::verify::van_der_pol_model;

fn trie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trie")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const VDP: &str = r#"
[data.synthetic]
system = { kind = "van_der_pol", mu = 1.0 }
duration = 10.0
dt = 0.02
"#;

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_deterministic_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{VDP}noise_std = 0.01\n"));
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, "1"), (&b, "1"), (&c, "2")] {
        let o = trie(&["synth", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    for f in ["data.csv", "truth.csv"] {
        assert_eq!(read(&a, f).lines().count(), 1 + 501, "{f}");
    }
    assert_eq!(read(&a, "data.csv"), read(&b, "data.csv"));
    assert_ne!(read(&a, "data.csv"), read(&c, "data.csv"));
    assert_eq!(read(&a, "truth.csv"), read(&c, "truth.csv"));
}

#[test]
fn fit_then_eval_reproduces_training_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("seed = 3\n[data]\nuse_truth = true\n{VDP}"));
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = trie(&["fit", "--config", &cfg, "--out", out_s, "--kind", "trie"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["kind"], "trie");
    assert_eq!(report["solver"]["status"], "optimal");
    assert!(report["objective"].as_f64().unwrap().is_finite());
    assert_eq!(report["seed"], 3);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["validation"].is_object());
    assert!(out.join("model.json").exists());
    assert_eq!(std::fs::read_to_string(out.join("costs.csv")).unwrap().lines().count(), 1 + 351);

    let o = trie(&["eval", "--config", &cfg, "--out", out_s, "--horizon", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ev = read_json(&out.join("eval.json"));
    assert_eq!(ev["train"], report["train"]);
    assert_eq!(ev["validation"], report["validation"]);
    assert_ne!(ev["config_hash"], report["config_hash"]);
    assert_eq!(std::fs::read_to_string(out.join("traces.csv")).unwrap().lines().count(), 1 + 201);

    let o = trie(&["eval", "--config", &cfg, "--out", out_s, "--kind", "trie"]);
    assert!(o.status.success());
    let ev = read_json(&out.join("eval.json"));
    assert_eq!(ev["config_hash"], report["config_hash"]);
    assert_eq!(ev["train"], report["train"]);
    assert_eq!(std::fs::read_to_string(out.join("traces.csv")).unwrap().lines().count(), 1 + 501);
}

#[test]
fn generator_model_evaluates_to_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), VDP);
    let out = dir.path().to_str().unwrap();
    assert!(trie(&["synth", "--config", &cfg, "--out", out]).status.success());
    let (spec, coefs) = van_der_pol_model(1.0);
    let model = dir.path().join("vdp.json");
    save_model(&model, &ModelFile::new(&spec, &coefs, None, None)).unwrap();
    let cfg = write_config(dir.path(), "[data]\nrecord_csv = \"truth.csv\"\n[eval]\ntrain_fraction = 1.0\n");
    let o = trie(&["eval", "--config", &cfg, "--out", out, "--model", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ev = read_json(&dir.path().join("eval.json"));
    assert!(ev["validation"].is_null());
    let err = ev["horizon_run"]["sim_error"].as_f64().unwrap();
    assert!(err < 1e-10, "{err}");
    assert_eq!(ev["horizon_run"]["status"]["status"], "completed");
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\ncsv = \"nowhere.csv\"\n[state]\npole = 2.0\n");
    let o = trie(&["fit", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[fit]\nkind = \"ls\"\n");
    assert_eq!(trie(&["fit", "--config", &bad]).status.code(), Some(1));
    assert_eq!(trie(&["fit", "--kind", "ls"]).status.code(), Some(1));
    assert_eq!(trie(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(trie(&["fit", "--config", "/nonexistent/run.toml"]).status.code(), Some(1));
    assert_eq!(trie(&["synth", "--out", dir.path().to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(trie(&["--help"]).status.code(), Some(0));
}

fn verify_checks(args: &[&str]) -> (Option<i32>, Value) {
    let o = trie(args);
    let summary: Value = serde_json::from_slice(&o.stdout).expect("JSON summary on stdout");
    (o.status.code(), summary)
}

fn check<'a>(summary: &'a Value, name: &str) -> &'a Value {
    summary["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn verify_prints_reproducible_summary() {
    let (code, a) = verify_checks(&["verify", "--seed", "5"]);
    let (_, b) = verify_checks(&["verify", "--seed", "5"]);
    assert_eq!(a["format"], "trie-verify/1");
    assert_eq!(code, Some(if a["passed"].as_bool().unwrap() { 0 } else { 4 }));
    for name in [
        "lmi_oracle_gate",
        "relaxation_upper_bound",
        "relaxation_identities",
        "projector_algebra",
        "transverse_deviation_oracle",
    ] {
        assert_eq!(check(&a, name)["passed"], true, "{name}: {}", check(&a, name)["detail"]);
        assert_eq!(check(&a, name)["metric"], check(&b, name)["metric"]);
    }
}

#[test]
fn verify_gate_catches_sign_flip() {
    let (code, s) = verify_checks(&["verify", "--inject-sign-flip"]);
    assert_eq!(code, Some(4));
    assert_eq!(check(&s, "lmi_oracle_gate")["passed"], false);
    assert!(check(&s, "bound_chain")["detail"].as_str().unwrap().starts_with("skipped"));
}
