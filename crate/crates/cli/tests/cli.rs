use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cumquant::corpus::{read_manifest, Category};
use cumquant::quantifier::{read_estimates_csv, QuantEstimate};
use tempfile::TempDir;

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cumquant"));
    cmd.args(args).env_remove("CUMQUANT_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run cumquant")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args, &[]);
    assert!(
        out.status.success(),
        "cumquant {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn small_corpus(tmp: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let dir = tmp.path().join(name);
    let mut args = vec!["synth", "--queries", "6", "--scale", "0.01", "--out"];
    let d = s(&dir);
    args.push(&d);
    args.extend_from_slice(extra);
    ok(&args);
    dir
}

fn read_estimates(path: &Path) -> Vec<QuantEstimate> {
    read_estimates_csv(std::fs::File::open(path).unwrap()).unwrap()
}

/// Writes labeled documents with `good`/`bad` words to a JSONL file.
fn write_jsonl(path: &Path, queries: &[(&str, usize, usize, usize)]) {
    let mut lines = String::new();
    for (q, p, n, unlabeled) in queries {
        for i in 0..*p {
            lines += &format!("{{\"id\":\"{q}-p{i}\",\"text\":\"good great fine {i}\",\"label\":\"P\",\"query\":\"{q}\"}}\n");
        }
        for i in 0..*n {
            lines += &format!("{{\"id\":\"{q}-n{i}\",\"text\":\"bad awful fine {i}\",\"label\":\"N\",\"query\":\"{q}\"}}\n");
        }
        for i in 0..*unlabeled {
            lines += &format!("{{\"id\":\"{q}-u{i}\",\"text\":\"good bad {i}\",\"query\":\"{q}\"}}\n");
        }
    }
    std::fs::write(path, lines).unwrap();
}

#[test]
fn synth_writes_requested_queries_deterministically() {
    let tmp = TempDir::new().unwrap();
    let a = small_corpus(&tmp, "a", &["--seed", "7"]);
    let b = small_corpus(&tmp, "b", &["--seed", "7"]);
    let manifest = read_manifest(&a).unwrap();
    assert_eq!(manifest.queries.len(), 6);
    assert_eq!(manifest.synth.as_ref().unwrap()["spec"]["seed"], 7);
    assert!(manifest.synth.as_ref().unwrap()["stats"]["documents"].as_u64().unwrap() > 0);
    for f in ["corpus.jsonl", "dictionary.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["synth", "--queries", "0", "--out", &s(&tmp.path().join("x"))], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("query"));
    assert_eq!(run(&["loo", "--no-such-flag"], &[]).status.code(), Some(1));
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let target = blocker.join("corpus");
    let out = run(&["synth", "--queries", "3", "--scale", "0.001", "--out", &s(&target)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(&s(&blocker)), "{}", stderr(&out));
}

#[test]
fn seed_precedence_is_flag_then_file_then_environment() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("config.toml");
    std::fs::write(&config, "seed = 5\n[synth]\nqueries = 4\n").unwrap();
    let seed_of = |dir: &Path| read_manifest(dir).unwrap().synth.unwrap()["spec"]["seed"].as_u64().unwrap();
    let base = ["synth", "--scale", "0.001"];
    let config = s(&config);

    let from_env = tmp.path().join("env");
    let out = run(&[&base[..], &["--out", &s(&from_env)]].concat(), &[("CUMQUANT_SEED", "11")]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(seed_of(&from_env), 11);

    let from_file = tmp.path().join("file");
    let out_file = s(&from_file);
    let args = [&base[..], &["--config", &config, "--out", &out_file]].concat();
    assert!(run(&args, &[("CUMQUANT_SEED", "11")]).status.success());
    assert_eq!(seed_of(&from_file), 5);
    assert_eq!(read_manifest(&from_file).unwrap().queries.len(), 4);

    let from_flag = tmp.path().join("flag");
    let out_flag = s(&from_flag);
    let args = [&base[..], &["--config", &config, "--seed", "9", "--out", &out_flag]].concat();
    assert!(run(&args, &[("CUMQUANT_SEED", "11")]).status.success());
    assert_eq!(seed_of(&from_flag), 9);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "sed = 1\n").unwrap();
    let out = run(&["synth", "--config", &s(&bad), "--out", &s(&tmp.path().join("z"))], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trained_model_round_trips_into_quantify() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &[]);
    let model = tmp.path().join("mnb.json");
    let est = tmp.path().join("est.csv");
    ok(&["train", "--corpus", &s(&corpus), "--classifier", "mnb", "--out", &s(&model)]);
    ok(&["quantify", "--model", &s(&model), "--corpus", &s(&corpus), "--out", &s(&est)]);
    let rows = read_estimates(&est);
    assert_eq!(rows.len(), 6 * 4);
    for e in &rows {
        assert!((e.positive_share + e.negative_share - 1.0).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&e.positive_share));
    }

    // The same result sets supplied as a loose record file.
    let est2 = tmp.path().join("est2.csv");
    ok(&[
        "quantify",
        "--model",
        &s(&model),
        "--input",
        &s(&corpus.join("corpus.jsonl")),
        "--dictionary",
        &s(&corpus.join("dictionary.json")),
        "--quantifier",
        "cc,phi-query",
        "--out",
        &s(&est2),
    ]);
    let subset = read_estimates(&est2);
    assert_eq!(subset.len(), 6 * 2);
    for e in &subset {
        assert!(rows.contains(e));
    }
}

#[test]
fn svm_training_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &[]);
    let (a, b) = (tmp.path().join("a.json"), tmp.path().join("b.json"));
    for out in [&a, &b] {
        ok(&["train", "--corpus", &s(&corpus), "--classifier", "svm", "--seed", "7", "--epochs", "20", "--out", &s(out)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn training_without_negative_documents_names_the_class() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("p_only.jsonl");
    write_jsonl(&input, &[("q1", 5, 0, 2), ("q2", 4, 0, 0)]);
    let corpus = tmp.path().join("c");
    ok(&["ingest", "--input", &s(&input), "--out", &s(&corpus)]);
    let out = run(&["train", "--corpus", &s(&corpus), "--out", &s(&tmp.path().join("m.json"))], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("labeled N"), "{}", stderr(&out));
}

#[test]
fn classify_and_count_is_exact_on_a_separable_corpus() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &["--preset", "separable", "--complement"]);
    let model = tmp.path().join("m.json");
    let est = tmp.path().join("est.csv");
    ok(&["train", "--corpus", &s(&corpus), "--out", &s(&model)]);
    ok(&["quantify", "--model", &s(&model), "--corpus", &s(&corpus), "--quantifier", "cc", "--out", &s(&est)]);
    let manifest = read_manifest(&corpus).unwrap();
    let rows = read_estimates(&est);
    assert_eq!(rows.len(), manifest.queries.len());
    for (q, e) in manifest.queries.iter().zip(&rows) {
        assert_eq!(q.query_id, e.query_id);
        let p = q.gold_counts.get(&Category::Positive).copied().unwrap_or(0) as f64;
        let n = q.gold_counts.get(&Category::Negative).copied().unwrap_or(0) as f64;
        assert_eq!((e.positive_size, e.negative_size), (p, n), "{}", q.query_id);
        assert!((e.positive_share - p / (p + n)).abs() < 1e-15);
    }
}

#[test]
fn quantify_rejects_other_vocabularies_and_empty_input() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &[]);
    let model = tmp.path().join("m.json");
    ok(&["train", "--corpus", &s(&corpus), "--out", &s(&model)]);

    let input = tmp.path().join("other.jsonl");
    write_jsonl(&input, &[("q1", 3, 3, 0)]);
    let other = tmp.path().join("other");
    ok(&["ingest", "--input", &s(&input), "--out", &s(&other)]);
    let out = run(&["quantify", "--model", &s(&model), "--corpus", &s(&other)], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("vocabulary"), "{}", stderr(&out));

    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let dict = s(&corpus.join("dictionary.json"));
    let out = run(&["quantify", "--model", &s(&model), "--input", &s(&empty), "--dictionary", &dict], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no documents"), "{}", stderr(&out));
}

#[test]
fn loo_writes_a_full_report_and_report_rebuilds_it() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &[]);
    let out = tmp.path().join("r");
    ok(&["loo", "--corpus", &s(&corpus), "--out", &s(&out)]);
    let table2 = std::fs::read_to_string(out.join("tables/table2.csv")).unwrap();
    let header: Vec<&str> = table2.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 12);
    for f in ["tables/table1.csv", "tables/table3.csv", "estimates.csv", "runs.json", "run.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let info: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(info["config"]["loo"]["normalize"], true);
    assert_eq!(info["config"]["loo"]["train"]["smoothing"], 0.01);

    let rebuilt = tmp.path().join("r2");
    ok(&["report", "--runs", &s(&out), "--out", &s(&rebuilt)]);
    for f in ["tables/table1.csv", "tables/table2.csv", "tables/table3.csv", "estimates.csv", "run.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(rebuilt.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn loo_feature_flags_reach_the_regression() {
    let tmp = TempDir::new().unwrap();
    let corpus = small_corpus(&tmp, "c", &[]);
    let out = tmp.path().join("r");
    ok(&[
        "loo",
        "--corpus",
        &s(&corpus),
        "--out",
        &s(&out),
        "--quantifier",
        "phi-query",
        "--no-normalize",
        "--include-size",
    ]);
    let info: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(info["config"]["loo"]["normalize"], false);
    assert_eq!(info["config"]["loo"]["include_size"], true);
    let header = std::fs::read_to_string(out.join("tables/table2.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "statistic,mnb-phi-query,dbm-phi-query,svm-phi-query"
    );
}

#[test]
fn loo_exits_with_two_when_a_fold_fails() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("docs.jsonl");
    write_jsonl(
        &input,
        &[("q1", 8, 6, 0), ("q2", 5, 9, 0), ("q3", 7, 7, 0), ("q4", 6, 8, 0), ("q5", 0, 0, 10)],
    );
    let corpus = tmp.path().join("c");
    ok(&["ingest", "--input", &s(&input), "--out", &s(&corpus)]);
    let out_dir = tmp.path().join("r");
    let out = run(&["loo", "--corpus", &s(&corpus), "--out", &s(&out_dir), "--classifier", "mnb"], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("q5"));
    let info: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(info["failed_folds"], 1);
}
