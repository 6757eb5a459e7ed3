//! Builds a gazetteer from training annotations, tags the dev set and scores it.
//!
//! `cargo run --example dictionary_baseline -- [MIN_LABEL_RATIO]`

use std::path::Path;

use toxtrig::corpus::load_corpus;
use toxtrig::dictionary::{build_dictionary, surface_counts};
use toxtrig::eval::evaluate;
use toxtrig::pipeline::run_dictionary;
use toxtrig::NormalizationPolicy;

fn main() -> toxtrig::Result<()> {
    let ratio: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let train = load_corpus(&toy.join("train"), true)?;
    let dev = load_corpus(&toy.join("dev"), true)?;
    let policy = NormalizationPolicy::default();

    for (surface, c) in surface_counts(&train, policy) {
        let types: Vec<&str> = c.labeled.keys().map(|t| t.as_str()).collect();
        println!("{surface:<28} {:.2} {}", c.label_ratio(), types.join(","));
    }
    let dict = build_dictionary(&train, policy, ratio)?;
    println!("\nmin_label_ratio {ratio}: {} entries\n{}", dict.len(), dict.to_text());

    let run = run_dictionary(&dev, &dict);
    println!("{}", evaluate(&dev, &run.predictions)?);
    Ok(())
}
