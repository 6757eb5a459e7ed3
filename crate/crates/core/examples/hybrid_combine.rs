//! Combines dictionary and LLM predictions under each merge policy and
//! compares the scores.
//!
//! `cargo run --example hybrid_combine`

use std::collections::BTreeMap;
use std::path::Path;

use toxtrig::combine::{combine, CombinePolicy};
use toxtrig::corpus::load_corpus;
use toxtrig::dictionary::build_dictionary;
use toxtrig::eval::evaluate;
use toxtrig::llm::{sample_examples, ExtractConfig, PromptTemplate, ReplayClient};
use toxtrig::pipeline::{run_dictionary, run_llm};
use toxtrig::NormalizationPolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let train = load_corpus(&toy.join("train"), true)?;
    let dev = load_corpus(&toy.join("dev"), true)?;
    let policy = NormalizationPolicy::default();

    let dict = run_dictionary(&dev, &build_dictionary(&train, policy, 1.0)?).predictions;
    let cfg = ExtractConfig::default();
    let examples = sample_examples(&train, cfg.k, cfg.seed, cfg.example_char_budget)?;
    let client = ReplayClient::open(&toy.join("replay.rpl"))?;
    let llm = run_llm(&dev, &cfg, &PromptTemplate::default(), &examples, &client, policy)?.predictions;

    println!(
        "{:<16} {:>9} {:>9} {:>9} {:>7}",
        "system", "precision", "recall", "f1", "gc"
    );
    let row = |name: &str, preds: &BTreeMap<String, Vec<toxtrig::Mention>>| -> toxtrig::Result<()> {
        let r = evaluate(&dev, preds)?;
        println!(
            "{name:<16} {:>9.4} {:>9.4} {:>9.4} {:>7.4}",
            r.micro.precision, r.micro.recall, r.micro.f1, r.gc
        );
        Ok(())
    };
    row("dictionary", &dict)?;
    row("llm", &llm)?;
    for p in CombinePolicy::ALL {
        let mut merged = BTreeMap::new();
        for doc in dev.documents() {
            let empty = Vec::new();
            let a = dict.get(doc.id()).unwrap_or(&empty);
            let b = llm.get(doc.id()).unwrap_or(&empty);
            merged.insert(doc.id().to_owned(), combine(a, b, p)?);
        }
        row(p.as_str(), &merged)?;
    }
    Ok(())
}
