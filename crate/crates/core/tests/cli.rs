mod common;

use std::path::Path;
use std::process::Command;

fn run(bin: &str, args: &[&str], dir: &Path) -> (bool, String, String) {
    let out = Command::new(bin).args(args).current_dir(dir).output().unwrap();
    (out.status.success(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

#[test]
fn corpus_and_metrics_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = env!("CARGO_BIN_EXE_corpus");
    let (ok, _, _) = run(corpus, &["synth", "--n", "30", "--seed", "4", "--out", "c.jsonl", "--splits-out", "s.json"], d);
    assert!(ok);
    let (ok, out, _) = run(corpus, &["validate", "c.jsonl"], d);
    assert!(ok, "{out}");
    assert!(out.contains("30 threads, 0 errors"));
    let (ok, out, _) = run(corpus, &["stats", "c.jsonl", "--splits", "s.json"], d);
    assert!(ok);
    assert!(out.contains("total (30)") && out.contains("train (24)"));
    let (ok, out, _) = run(corpus, &["agreement", "c.jsonl", "c.jsonl"], d);
    assert!(ok);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["report"]["span_f1"], 1.0);

    std::fs::write(d.join("bad.jsonl"), "{\"id\": 3}\n").unwrap();
    let (ok, out, _) = run(corpus, &["validate", "bad.jsonl"], d);
    assert!(!ok);
    assert!(out.contains("line 1"));

    std::fs::write(d.join("cand.txt"), "the cat\nit is suggested to rest\n").unwrap();
    std::fs::write(d.join("ref.txt"), "the cat sat\nit is suggested to rest\n").unwrap();
    let metrics = env!("CARGO_BIN_EXE_metrics");
    let (ok, _, err) = run(metrics, &["score", "--cand", "cand.txt", "--ref", "ref.txt", "--out", "report.json"], d);
    assert!(ok, "{err}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["count"], 2);
    assert!((v["per_example"][0]["bleu"].as_f64().unwrap() - 0.6065).abs() < 1e-4);
    assert_eq!(v["per_example"][1]["rouge1"]["f1"], 1.0);
    assert!(v["rougeL"]["f1"].is_number());
}

#[test]
fn plasma_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cfg = serde_json::to_value(common::tiny_config()).unwrap();
    cfg["out_dir"] = "run".into();
    std::fs::write(d.join("cfg.json"), cfg.to_string()).unwrap();
    let plasma = env!("CARGO_BIN_EXE_plasma");

    let (ok, _, err) = run(plasma, &["train", "-c", "cfg.json"], d);
    assert!(!ok && err.contains("pretrain"), "{err}");
    let (ok, _, err) = run(plasma, &["pretrain", "-c", "cfg.json"], d);
    assert!(ok, "{err}");
    let resolved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("run/pretrain/resolved_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["prefix_len"], 4);
    assert!(resolved["energy"].is_object() && resolved["placement"].is_string());

    let (ok, out, err) = run(plasma, &["train", "-c", "cfg.json", "--variant", "full"], d);
    assert!(ok, "{err}");
    assert!(out.contains("base hash unchanged: true"));
    let log = std::fs::read_to_string(d.join("run/train-full/steps.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    for k in ["step", "ce", "lp", "E", "p", "alpha"] {
        assert!(first.get(k).is_some(), "{k}");
    }

    let (ok, out, err) = run(plasma, &["eval", "-c", "cfg.json", "--split", "test"], d);
    assert!(ok, "{err}");
    assert!(out.contains("OVERALL") && out.contains("METEOR"));
    assert!(d.join("run/eval-full-test/report.json").exists());

    let (ok, out, err) = run(plasma, &["ablate", "-c", "cfg.json", "--matrix", "full,no_Et", "--seeds", "1"], d);
    assert!(ok, "{err}");
    assert!(out.contains("no_Et"));
    let (ok, _, err) = run(plasma, &["ablate", "-c", "cfg.json", "--matrix", "bogus"], d);
    assert!(!ok && err.contains("bogus"), "{err}");

    let data = plasma::harness::load_dataset(&common::tiny_config()).unwrap();
    let id = &data.threads[0].id;
    let cands = format!(
        "{{\"thread_id\":\"{id}\",\"perspective\":\"SUGGESTION\",\"text\":\"rest and drink water\"}}\n\
         {{\"thread_id\":\"{id}\",\"perspective\":\"SUGGESTION\",\"text\":\"it is suggested rest and drink water\"}}\n\
         {{\"thread_id\":\"missing\",\"perspective\":\"CAUSE\",\"text\":\"x\"}}\n"
    );
    std::fs::write(d.join("c.jsonl"), cands).unwrap();
    let (ok, out, err) = run(plasma, &["rerank", "-c", "cfg.json", "--candidates", "c.jsonl", "--perspective", "SUGGESTION"], d);
    assert!(ok, "{err}");
    assert!(err.contains("line 3"));
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["line"], 2);
}
