//! Splits a report into sections on blank lines; offsets stay in document
//! coordinates.
//!
//! `cargo run --example sections`

use toxtrig::segment::{count_sentences, segment_sections};

const REPORT: &str = "Varón de 54 años, fumador de 20 cigarrillos/día.\n\n\
Antecedentes: consumo abusivo de alcohol. ¿Cannabis? Niega.\r\n\r\n\
Exploración física sin hallazgos.\n";

fn main() {
    for (i, s) in segment_sections(REPORT).iter().enumerate() {
        println!(
            "[{i}] {:>3}..{:<3} {} sentence(s): {:?}",
            s.start,
            s.end,
            count_sentences(&s.text),
            s.text
        );
    }
    println!("total sentences: {}", count_sentences(REPORT));
}
