//! Scores hand-written predictions to show how strict matching, containment
//! and character overlap differ.
//!
//! `cargo run --example scoring`

use toxtrig::eval::EvalReport;
use toxtrig::{Document, Mention, TriggerType};

fn main() -> toxtrig::Result<()> {
    let doc = Document::new("r1", "Exfumador. Niega consumo de cocaína esnifada. Bebe vino.")?;
    let span = |kind, surface: &str| {
        let byte = doc.text().find(surface).expect("surface in text");
        let start = doc.text()[..byte].chars().count();
        Mention::from_document(&doc, kind, start, start + surface.chars().count())
    };
    let gold = vec![
        span(TriggerType::Tobacco, "Exfumador")?,
        span(TriggerType::Drug, "cocaína")?,
        span(TriggerType::Alcohol, "vino")?,
    ];
    let pred = vec![
        span(TriggerType::Tobacco, "Exfumador")?,
        span(TriggerType::Drug, "cocaína esnifada")?,
        span(TriggerType::Drug, "Bebe vino")?,
    ];
    let report = EvalReport::from_mentions(&gold, &pred);
    println!("{report}");
    print!("{}", report.to_tsv());
    Ok(())
}
