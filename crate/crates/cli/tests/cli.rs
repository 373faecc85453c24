use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmc_core::ingest::{format_conll, write_document_jsonl, write_jsonl, ParallelDocument};
use mmc_core::merge::{AnnotationTriplet, Answer};
use mmc_core::model::{build_clusters, Anchor, Document, Mention, MentionFlag, SplitPolicy, Utterance};
use mmc_review::AdjudicationSet;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mmc-toolkit"));
    c.env_remove("MMC_TOOLKIT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn scene(id: &str, episode: &str) -> Document {
    let mut d = Document::new(id, "en");
    d.metadata.insert("episode".into(), episode.into());
    d.metadata.insert("scene".into(), id.into());
    d.utterances = vec![
        Utterance::new("Ross", ["I", "saw", "Rachel", "today"]),
        Utterance::new("Monica", ["Did", "she", "see", "you", "?"]),
        Utterance::new("Ross", ["She", "did", "not"]),
    ];
    d.mentions = vec![
        Mention::speaker("m0", 0).with_flag(MentionFlag::NoAntecedent),
        Mention::span("m1", 0, 0, 1).with_antecedents(["m0"]),
        Mention::span("m2", 0, 2, 3).with_flag(MentionFlag::NoAntecedent),
        Mention::span("m3", 1, 1, 2).with_antecedents(["m2"]),
        Mention::span("m4", 1, 3, 4).with_antecedents(["m1"]),
        Mention::span("m5", 2, 0, 1).with_antecedents(["m3"]),
    ];
    d
}

fn corpus(dir: &Path) -> PathBuf {
    let path = dir.join("docs.jsonl");
    write_document_jsonl(&[scene("s1", "e1"), scene("s2", "e1")], &path).unwrap();
    path
}

fn identity_parallel(dir: &Path) -> PathBuf {
    let parallels: Vec<ParallelDocument> = [scene("s1", "e1"), scene("s2", "e1")]
        .into_iter()
        .map(|source| {
            let mut target = Document::new(format!("{}.zh", source.doc_id), "zh");
            target.utterances = source.utterances.clone();
            let n = source.utterances.len();
            ParallelDocument {
                source,
                targets: BTreeMap::from([("zh".to_string(), target)]),
                utterance_map: BTreeMap::from([("zh".to_string(), (0..n).map(Some).collect())]),
            }
        })
        .collect();
    let path = dir.join("parallel.jsonl");
    write_jsonl(&parallels, &path).unwrap();
    path
}

/// Cells of the row whose first cell is `label`.
fn row(out: &str, label: &str) -> Vec<String> {
    out.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .find(|cells| cells.first().map(String::as_str) == Some(label))
        .unwrap_or_else(|| panic!("no row {label} in\n{out}"))
}

#[test]
fn help_documents_every_subcommand() {
    let top = run(&["--help"]);
    assert!(top.status.success());
    let cmds: [&[&str]; 15] = [
        &["project"],
        &["corrections", "apply"],
        &["merge"],
        &["adjudicate", "export"],
        &["adjudicate", "apply"],
        &["score"],
        &["baseline", "head-lemma"],
        &["stats", "assemble"],
        &["stats", "projection"],
        &["stats", "speakers"],
        &["replace-names"],
        &["loss-check"],
        &["serve"],
        &["corrections"],
        &["stats"],
    ];
    for c in cmds {
        let mut args = c.to_vec();
        args.push("--help");
        let o = run(&args);
        assert!(o.status.success(), "{args:?}");
        assert!(stdout(&o).contains("Usage:"), "{args:?}");
    }
    let serve = stdout(&run(&["serve", "--help"]));
    assert!(serve.contains("[default: 8080]"));
    let score = stdout(&run(&["score", "--help"]));
    assert!(score.contains("[default: jsonl]") && score.contains("--drop-singletons") && score.contains("--macro"));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let o = run(&["score", "--key", p(&missing), "--response", p(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["score", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"not\": \"a document\"}\n").unwrap();
    let o = run(&["score", "--key", p(&bad), "--response", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(run(&["--config", p(&cfg), "loss-check"]).status.code(), Some(2));
}

#[test]
fn score_identical_files_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let docs = corpus(dir.path());
    let tsv = dir.path().join("score.tsv");
    let o = run(&["score", "--key", p(&docs), "--response", p(&docs), "--tsv", p(&tsv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for metric in ["MUC", "B3", "CEAFphi4", "mentions"] {
        assert_eq!(row(&out, metric)[1..], ["100.00", "100.00", "100.00"], "{metric}");
    }
    assert_eq!(row(&out, "CoNLL")[3], "100.00");
    let tsv = std::fs::read_to_string(tsv).unwrap();
    assert!(tsv.starts_with("metric\trecall\tprecision\tf1\n"));

    for extra in [["--macro"], ["--drop-singletons"]] {
        let mut args = vec!["score", "--key", p(&docs), "--response", p(&docs)];
        args.extend(extra);
        assert_eq!(row(&stdout(&run(&args)), "CoNLL")[3], "100.00");
    }
}

#[test]
fn score_reads_conll() {
    let dir = tempfile::tempdir().unwrap();
    let docs = [scene("s1", "e1")];
    let clusters: Vec<_> = docs.iter().map(|d| build_clusters(d, SplitPolicy::DropSplit).unwrap()).collect();
    let path = dir.path().join("key.conll");
    std::fs::write(&path, format_conll(&docs, &clusters)).unwrap();
    let o = run(&["score", "--format", "conll", "--key", p(&path), "--response", p(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(row(&stdout(&o), "CoNLL")[3], "100.00");
}

#[test]
fn identity_projection_has_no_nulls_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let parallel = identity_parallel(dir.path());
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("proj{jobs}.jsonl"));
        let o = run(&["--jobs", jobs, "project", "--parallel", p(&parallel), "--identity-alignment", "--out", p(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let total = row(&stdout(&o), "total");
        // split, scenes, mentions, projected, null, drop%
        assert_eq!(total[1..6], ["2", "12", "12", "0", "0.00"]);
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn corrections_apply_writes_documents() {
    let dir = tempfile::tempdir().unwrap();
    let parallel = identity_parallel(dir.path());
    let proj = dir.path().join("proj.jsonl");
    assert!(run(&["project", "--parallel", p(&parallel), "--identity-alignment", "--out", p(&proj)]).status.success());
    let log = dir.path().join("log.jsonl");
    std::fs::write(
        &log,
        "{\"action\":\"DELETION\",\"annotator\":\"a\",\"doc_id\":\"s1.zh\",\"mention\":\"m4\",\"timestamp\":1}\n",
    )
    .unwrap();
    let out = dir.path().join("fixed.jsonl");
    let o = run(&["corrections", "apply", "--projections", p(&proj), "--log", p(&log), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(row(&stdout(&o), "total")[9], "1");
    let text = std::fs::read_to_string(out).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["mentions"].as_array().unwrap().len(), 5);

    std::fs::write(&log, "{\"action\":\"DELETION\",\"annotator\":\"a\",\"doc_id\":\"nope\",\"mention\":\"m4\",\"timestamp\":1}\n").unwrap();
    let o = run(&["corrections", "apply", "--projections", p(&proj), "--log", p(&log), "--out", p(&dir.path().join("x.jsonl"))]);
    assert_eq!(o.status.code(), Some(1));
}

fn merge_fixture(dir: &Path) -> PathBuf {
    let t = |q: &str, i: usize, a1: Answer, a2: Answer| AnnotationTriplet::new(q, Anchor::span(i, 0, 1), a1, a2);
    let set = AdjudicationSet {
        doc_id: "s1".into(),
        triplets: vec![
            t("a", 0, Answer::NoAntecedent, Answer::NoAntecedent),
            t("q1", 1, Answer::mention("a"), Answer::mention("a")),
            t("q2", 2, Answer::mention("q1"), Answer::mention("a")),
            t("q3", 3, Answer::mention("a"), Answer::NoAntecedent),
            t("q4", 4, Answer::NotMention, Answer::NotMention),
            t("q5", 5, Answer::mention("q3"), Answer::mention("q1")),
        ],
    };
    let path = dir.join("adjudication.jsonl");
    write_jsonl(&[set], &path).unwrap();
    path
}

fn queue_ids(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["query"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn merge_queues_the_expected_disagreements() {
    let dir = tempfile::tempdir().unwrap();
    let input = merge_fixture(dir.path());
    let (out, queue) = (dir.path().join("merged.jsonl"), dir.path().join("queue.jsonl"));
    let o = run(&["merge", "--input", p(&input), "--out", p(&out), "--queue", p(&queue)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(queue_ids(&queue), ["q3", "q5"]);
    // doc, queries, resolved, not_mention, queued, clusters
    assert_eq!(row(&stdout(&o), "s1")[1..], ["6", "4", "1", "2", "1"]);

    let decisions = dir.path().join("decisions.jsonl");
    std::fs::write(&decisions, "{\"choice\":\"PICK_FIRST\",\"doc_id\":\"s1\",\"query\":\"q3\"}\n").unwrap();
    let pending = dir.path().join("pending.jsonl");
    let o = run(&["adjudicate", "export", "--input", p(&input), "--decisions", p(&decisions), "--out", p(&pending)]);
    assert!(o.status.success());
    assert_eq!(queue_ids(&pending), ["q5"]);

    let fin = dir.path().join("final.jsonl");
    let o = run(&["adjudicate", "apply", "--input", p(&input), "--decisions", p(&decisions), "--out", p(&fin)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = row(&stdout(&o), "s1");
    assert_eq!(r[1..3], ["6", "0"]);
}

#[test]
fn replace_names_round_trips_and_honours_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let docs = corpus(dir.path());
    let pool = dir.path().join("pool.txt");
    std::fs::write(&pool, "Alice\nBea\nCarla\nDana\nElla\nFay\n").unwrap();
    let run_with = |name: &str, seed: Option<&str>, env: Option<&str>| -> Vec<u8> {
        let out = dir.path().join(format!("{name}.jsonl"));
        let map = dir.path().join(format!("{name}.tsv"));
        let mut c = bin();
        c.args(["replace-names", "--input", p(&docs), "--out", p(&out), "--mapping", p(&map)]);
        c.args(["--pool", &format!("f={}", p(&pool)), "--default-group", "f"]);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("MMC_TOOLKIT_SEED", e);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(map).unwrap()
    };
    let a = run_with("a", Some("5"), None);
    let b = run_with("b", Some("5"), Some("6"));
    let c = run_with("c", None, Some("5"));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("scene\toriginal\treplacement\n"));

    let back = dir.path().join("back.jsonl");
    let o = run(&["replace-names", "--invert", "--input", p(&dir.path().join("a.jsonl")), "--mapping", p(&dir.path().join("a.tsv")), "--out", p(&back)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(back).unwrap(), std::fs::read(&docs).unwrap());
}

#[test]
fn baseline_and_speaker_stats() {
    let dir = tempfile::tempdir().unwrap();
    let docs = corpus(dir.path());
    let out = dir.path().join("baseline.jsonl");
    let o = run(&["baseline", "head-lemma", "--input", p(&docs), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["score", "--key", p(&docs), "--response", p(&out)]);
    assert!(o.status.success());

    let buckets = dir.path().join("buckets");
    let o = run(&["stats", "speakers", "--input", p(&docs), "--out-dir", p(&buckets)]);
    assert!(o.status.success());
    assert_eq!(row(&stdout(&o), "2")[1], "2");
    assert_eq!(row(&stdout(&o), "<=1")[1], "0");
    assert!(buckets.join("speakers_2.jsonl").exists());
}

#[test]
fn loss_check_passes() {
    let o = run(&["loss-check", "--batches", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("PASS") && !out.contains("FAIL"));
    assert!(out.contains("ontonotes"));
}
