//! Aligns model phrases back to character spans and resolves overlaps by
//! keeping the shortest span.
//!
//! `cargo run --example overlap_resolution`

use toxtrig::align::{align_phrases, find_occurrences, resolve_overlaps};
use toxtrig::llm::PhraseSet;
use toxtrig::segment::segment_sections;
use toxtrig::{Document, NormalizationPolicy};

fn main() -> toxtrig::Result<()> {
    let doc = Document::new(
        "demo",
        "Motivo de consulta.\n\nPaciente con tabaquismo activo y consumo abusivo de alcohol.",
    )?;
    let policy = NormalizationPolicy::default();
    println!(
        "occurrences of 'ALCOHOL': {:?}",
        find_occurrences(doc.text(), "ALCOHOL", policy)
    );

    let answer = PhraseSet {
        tobacco: vec!["tabaquismo activo".into(), "tabaquismo".into()],
        alcohol: vec!["consumo abusivo de alcohol".into(), "alcohol".into(), "cerveza".into()],
        ..PhraseSet::default()
    };
    let per_section: Vec<_> = segment_sections(doc.text())
        .into_iter()
        .map(|s| {
            let phrases = if s.text.contains("Paciente") {
                answer.clone()
            } else {
                PhraseSet::default()
            };
            (s, phrases)
        })
        .collect();
    let alignment = align_phrases(&per_section, policy);
    for c in &alignment.spans {
        println!(
            "candidate {:<8} {:>2}..{:<2} {:?}",
            c.kind,
            c.start,
            c.end,
            doc.slice(c.start, c.end).unwrap()
        );
    }
    for h in &alignment.hallucinated {
        println!("dropped   {:<8} {:?} (section {})", h.kind, h.phrase, h.section);
    }
    for m in resolve_overlaps(&doc, &alignment.spans)? {
        println!("kept      {:<8} {:>2}..{:<2} {:?}", m.kind, m.start, m.end, m.surface);
    }
    Ok(())
}
