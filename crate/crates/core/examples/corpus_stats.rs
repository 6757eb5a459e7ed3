//! Loads an annotated directory and prints document, sentence and mention
//! counts per trigger type.
//!
//! `cargo run --example corpus_stats -- [DIR]`

use std::path::PathBuf;

use toxtrig::corpus::{corpus_stats, load_corpus};

fn main() -> toxtrig::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/toy/dev")));
    let corpus = load_corpus(&dir, true)?;
    print!("{}", corpus_stats(&corpus));

    let doc = &corpus.documents()[0];
    println!("\n{}:", doc.id());
    for m in corpus.gold_for(doc.id()) {
        println!("  {:<8} {:>4} {:>4}  {}", m.kind, m.start, m.end, m.surface);
    }
    Ok(())
}
