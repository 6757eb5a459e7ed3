//! Runs few-shot extraction over the toy dev set offline, serving model
//! answers from a recorded replay file, and prints per-document diagnostics.
//!
//! `cargo run --example replay_extraction`

use std::path::Path;

use toxtrig::corpus::load_corpus;
use toxtrig::eval::evaluate;
use toxtrig::llm::{sample_examples, ExtractConfig, PromptTemplate, ReplayClient};
use toxtrig::pipeline::run_llm;
use toxtrig::NormalizationPolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let train = load_corpus(&toy.join("train"), true)?;
    let dev = load_corpus(&toy.join("dev"), true)?;
    let cfg = ExtractConfig::default();
    let examples = sample_examples(&train, cfg.k, cfg.seed, cfg.example_char_budget)?;
    let client = ReplayClient::open(&toy.join("replay.rpl"))?;

    let run = run_llm(
        &dev,
        &cfg,
        &PromptTemplate::default(),
        &examples,
        &client,
        NormalizationPolicy::default(),
    )?;
    for d in &run.diagnostics {
        println!(
            "{}: {} sections, {} candidates, {} kept, {} failed",
            d.doc_id,
            d.sections,
            d.candidates,
            d.mentions,
            d.failed_sections.len()
        );
        for h in &d.hallucinated {
            println!("    not found in text: {} {:?}", h.kind, h.phrase);
        }
    }
    for m in &run.predictions["dv01"] {
        println!("dv01 {} {}..{} {:?}", m.kind, m.start, m.end, m.surface);
    }
    println!("\n{}", evaluate(&dev, &run.predictions)?);
    Ok(())
}
