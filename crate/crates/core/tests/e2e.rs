//! End-to-end runs over the bundled toy corpus through the CLI entry point.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use toxtrig::corpus::{corpus_stats, load_corpus};
use toxtrig::llm::{sample_examples, ChatRequest, ClientError, ExtractConfig, PromptTemplate, RecordingClient};
use toxtrig::pipeline::{load_predictions, run_llm, RunManifest};
use toxtrig::segment::segment_sections;
use toxtrig::{NormalizationPolicy, TriggerType};

fn run(args: &[&str]) -> i32 {
    toxtrig::cli::run(std::iter::once("toxtrig").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_dir_sorted(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect()
}

/// Re-records `toy/replay.rpl` from `toy/llm_answers.json` and rewrites the
/// oracle-scored `toy/golden_report.tsv`. Run after changing the prompt
/// template or the toy corpus:
///
/// `cargo test -p toxtrig --test e2e -- --ignored regenerate`
#[test]
#[ignore]
fn regenerate_toy_fixtures() {
    let toy = common::toy();
    let dev = load_corpus(&toy.join("dev"), true).unwrap();
    let train = load_corpus(&toy.join("train"), true).unwrap();
    let answers: BTreeMap<String, Vec<serde_json::Value>> =
        serde_json::from_str(&fs::read_to_string(toy.join("llm_answers.json")).unwrap()).unwrap();
    let mut by_text: HashMap<String, String> = HashMap::new();
    for doc in dev.documents() {
        let sections = segment_sections(doc.text());
        let doc_answers = &answers[doc.id()];
        assert_eq!(sections.len(), doc_answers.len(), "{}", doc.id());
        for (s, a) in sections.iter().zip(doc_answers) {
            by_text.insert(format!("Text:\n{}", s.text), a.to_string());
        }
    }
    let scripted = move |req: &ChatRequest| -> Result<String, ClientError> {
        let target = &req.messages.last().unwrap().content;
        by_text.get(target).cloned().ok_or(ClientError::ReplayMiss {
            hash: req.prompt_hash(),
        })
    };
    let cfg = ExtractConfig {
        k: 5,
        seed: 42,
        ..Default::default()
    };
    let examples = sample_examples(&train, cfg.k, cfg.seed, cfg.example_char_budget).unwrap();
    let recorder = RecordingClient::new(scripted);
    let run = run_llm(
        &dev,
        &cfg,
        &PromptTemplate::default(),
        &examples,
        &recorder,
        NormalizationPolicy::default(),
    )
    .unwrap();
    assert!(run.is_clean());
    recorder.save(&toy.join("replay.rpl")).unwrap();

    let pred: Vec<_> = run.predictions.values().flatten().cloned().collect();
    fs::write(
        toy.join("golden_report.tsv"),
        common::oracle_report_tsv(&dev.all_gold(), &pred),
    )
    .unwrap();
}

#[test]
fn toy_corpus_statistics() {
    let toy = common::toy();
    let dev = load_corpus(&toy.join("dev"), true).unwrap();
    let stats = corpus_stats(&dev);
    assert_eq!(stats.n_documents, 10);
    assert_eq!(stats.n_mentions, 21);
    let expected = [
        (TriggerType::Tobacco, 5),
        (TriggerType::Alcohol, 6),
        (TriggerType::Cannabis, 3),
        (TriggerType::Drug, 7),
    ];
    assert_eq!(stats.per_type, expected.into_iter().collect());
    assert_eq!(stats.n_sentences, 22);
}

#[test]
fn replay_extraction_is_byte_identical_and_matches_golden() {
    let toy = common::toy();
    let tmp = tempfile::tempdir().unwrap();
    let outs = [tmp.path().join("a"), tmp.path().join("b")];
    for out in &outs {
        let code = run(&[
            "extract",
            "--strategy",
            "few-shot",
            "--k",
            "5",
            "--seed",
            "42",
            "--replay",
            p(&toy.join("replay.rpl")),
            "--train",
            p(&toy.join("train")),
            "--in",
            p(&toy.join("dev")),
            "--out",
            p(out),
        ]);
        assert_eq!(code, 0);
    }
    let (mut a, mut b) = (read_dir_sorted(&outs[0]), read_dir_sorted(&outs[1]));
    let ma = RunManifest::from_json(std::str::from_utf8(&a.remove("manifest.json").unwrap()).unwrap()).unwrap();
    let mb = RunManifest::from_json(std::str::from_utf8(&b.remove("manifest.json").unwrap()).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 10);
    let strip = |mut m: RunManifest| {
        m.started_at_unix = 0;
        m.finished_at_unix = 0;
        m
    };
    assert_eq!(strip(ma.clone()), strip(mb));
    assert_eq!(ma.examples.len(), 5);
    assert_eq!(ma.summary.failed_sections, 0);

    let report = tmp.path().join("report.tsv");
    assert_eq!(
        run(&[
            "evaluate",
            "--gold",
            p(&toy.join("dev")),
            "--pred",
            p(&outs[0]),
            "--out",
            p(&report)
        ]),
        0
    );
    assert_eq!(
        fs::read_to_string(&report).unwrap(),
        fs::read_to_string(toy.join("golden_report.tsv")).unwrap()
    );
}

#[test]
fn replay_miss_is_recorded_and_fails_the_run() {
    let toy = common::toy();
    let tmp = tempfile::tempdir().unwrap();
    // a different seed samples different demonstrations, so every prompt misses
    let code = run(&[
        "extract",
        "--strategy",
        "few-shot",
        "--k",
        "3",
        "--seed",
        "7",
        "--replay",
        p(&toy.join("replay.rpl")),
        "--train",
        p(&toy.join("train")),
        "--in",
        p(&toy.join("dev")),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(code, 1);
    let manifest = RunManifest::from_json(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.summary.failed_documents.len(), 10);
    assert!(manifest.documents[0].failed_sections[0]
        .error
        .contains("no recorded response"));
    let dev = load_corpus(&toy.join("dev"), false).unwrap();
    assert!(load_predictions(tmp.path(), &dev).unwrap().values().all(Vec::is_empty));
}

#[test]
fn dictionary_baseline_and_hybrid_through_cli() {
    let toy = common::toy();
    let tmp = tempfile::tempdir().unwrap();
    let dict = tmp.path().join("dict.tsv");
    let dict_out = tmp.path().join("dict");
    let llm_out = tmp.path().join("llm");
    let hybrid = tmp.path().join("hybrid");
    assert_eq!(
        run(&[
            "build-dict",
            "--train",
            p(&toy.join("train")),
            "--min-label-ratio",
            "1.0",
            "--out",
            p(&dict)
        ]),
        0
    );
    let text = fs::read_to_string(&dict).unwrap();
    assert!(text.contains("cocaína\tDRUG\n"));
    assert!(text.contains("hachís\tCANNABIS\n"));

    let dev = p(&toy.join("dev")).to_owned();
    assert_eq!(
        run(&[
            "extract",
            "--strategy",
            "dict",
            "--dict",
            p(&dict),
            "--in",
            &dev,
            "--out",
            p(&dict_out)
        ]),
        0
    );
    assert_eq!(
        run(&[
            "extract",
            "--strategy",
            "few-shot",
            "--k",
            "5",
            "--seed",
            "42",
            "--replay",
            p(&toy.join("replay.rpl")),
            "--train",
            p(&toy.join("train")),
            "--in",
            &dev,
            "--out",
            p(&llm_out),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "combine",
            "--a",
            p(&dict_out),
            "--b",
            p(&llm_out),
            "--in",
            &dev,
            "--combine-policy",
            "union-shorter",
            "--out",
            p(&hybrid),
        ]),
        0
    );
    let corpus = load_corpus(&toy.join("dev"), true).unwrap();
    let score = |dir: &Path| {
        let preds = load_predictions(dir, &corpus).unwrap();
        toxtrig::eval::evaluate(&corpus, &preds).unwrap()
    };
    let (d, l, h) = (score(&dict_out), score(&llm_out), score(&hybrid));
    // the hybrid keeps every input mention or something overlapping it
    assert!(h.gc >= d.gc.min(l.gc));
    assert!(h.micro.counts.tp + h.micro.counts.fp >= d.micro.counts.tp.max(l.micro.counts.tp));
}

#[test]
fn stats_and_split_commands() {
    let toy = common::toy();
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["stats", "--in", p(&toy.join("train"))]), 0);
    let (tr, dv) = (tmp.path().join("tr"), tmp.path().join("dv"));
    assert_eq!(
        run(&[
            "split",
            "--in",
            p(&toy.join("dev")),
            "--holdout",
            "3",
            "--seed",
            "1",
            "--out-train",
            p(&tr),
            "--out-dev",
            p(&dv)
        ]),
        0
    );
    let (a, b) = (load_corpus(&tr, true).unwrap(), load_corpus(&dv, true).unwrap());
    assert_eq!((a.len(), b.len()), (7, 3));
    assert_eq!(corpus_stats(&a).n_mentions + corpus_stats(&b).n_mentions, 21);
    assert_eq!(
        run(&[
            "split",
            "--in",
            p(&toy.join("dev")),
            "--holdout",
            "10",
            "--out-train",
            p(&tr),
            "--out-dev",
            p(&dv)
        ]),
        1
    );
}

#[test]
fn bad_invocations() {
    assert_eq!(run(&["extract", "--strategy", "magic", "--in", "x", "--out", "y"]), 2);
    assert_eq!(
        run(&["evaluate", "--gold", "/nonexistent/gold", "--pred", "/nonexistent/pred"]),
        1
    );
    assert_eq!(
        run(&[
            "extract",
            "--strategy",
            "dict",
            "--in",
            p(&common::toy().join("dev")),
            "--out",
            "/tmp/x"
        ]),
        1
    );
}
