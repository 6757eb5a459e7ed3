//! Samples few-shot examples from the training set and prints the chat
//! messages sent for one dev section, with the request's replay key.
//!
//! `cargo run --example few_shot_prompt -- [K] [SEED]`

use std::path::Path;

use toxtrig::corpus::load_corpus;
use toxtrig::llm::{render_prompt, response_schema, sample_examples, ChatRequest, ExtractConfig, PromptTemplate};
use toxtrig::segment::segment_sections;

fn main() -> toxtrig::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExtractConfig::default();
    cfg.k = args.next().and_then(|s| s.parse().ok()).unwrap_or(cfg.k);
    cfg.seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(cfg.seed);

    let toy = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let train = load_corpus(&toy.join("train"), true)?;
    let dev = load_corpus(&toy.join("dev"), false)?;
    let examples = sample_examples(&train, cfg.k, cfg.seed, cfg.example_char_budget)?;
    println!(
        "examples: {:?}\n",
        examples.iter().map(|e| e.doc_id.as_str()).collect::<Vec<_>>()
    );

    let section = &segment_sections(dev.documents()[0].text())[0];
    let template = PromptTemplate::default();
    let messages = render_prompt(&template, &examples, &section.text)?;
    for m in &messages {
        println!("--- {:?}\n{}", m.role, m.content);
    }
    let request = ChatRequest {
        model: cfg.model.clone(),
        messages,
        temperature: cfg.temperature,
        top_p: cfg.top_p,
        max_tokens: cfg.max_tokens,
        response_schema: response_schema(template.assertion_variant),
    };
    println!("\nreplay key: {}", request.prompt_hash());
    Ok(())
}
