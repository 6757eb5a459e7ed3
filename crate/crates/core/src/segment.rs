//! Section splitting on blank lines, and a rule-based sentence counter.

use serde::{Deserialize, Serialize};

/// A contiguous slice of a document, in char offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Splits text into sections at runs of two or more line breaks.
///
/// `\r\n` counts as a single line break. Separator runs and the whitespace at
/// either edge of a fragment belong to no section; whitespace-only fragments
/// are dropped.
pub fn segment_sections(text: &str) -> Vec<Section> {
    let chars: Vec<char> = text.chars().collect();
    let mut sections = Vec::new();
    let mut frag_start = 0;
    let mut i = 0;
    while i < chars.len() {
        if !matches!(chars[i], '\n' | '\r') {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut breaks = 0;
        while i < chars.len() && matches!(chars[i], '\n' | '\r') {
            if chars[i] == '\n' || chars.get(i + 1) != Some(&'\n') {
                breaks += 1;
            }
            i += 1;
        }
        if breaks >= 2 {
            push_trimmed(&chars, frag_start, run_start, &mut sections);
            frag_start = i;
        }
    }
    push_trimmed(&chars, frag_start, chars.len(), &mut sections);
    sections
}

fn push_trimmed(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<Section>) {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start < end {
        out.push(Section {
            start,
            end,
            text: chars[start..end].iter().collect(),
        });
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '…')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || matches!(c, '¿' | '¡')
}

/// Counts sentences with a deterministic punctuation rule.
///
/// A sentence ends at `.`, `?`, `!` or `…` when followed by whitespace and
/// then an uppercase letter, `¿`, `¡`, or the end of the text. Line breaks
/// also end a sentence in progress, and a trailing fragment without final
/// punctuation counts as one sentence.
pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut in_sentence = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '\n' | '\r') {
            if in_sentence {
                count += 1;
                in_sentence = false;
            }
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        in_sentence = true;
        if is_terminal(c) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() && !matches!(chars[j], '\n' | '\r') {
                j += 1;
            }
            let at_end = j == chars.len();
            let at_break = j < chars.len() && matches!(chars[j], '\n' | '\r');
            let boundary = at_end || at_break || (j > i + 1 && opens_sentence(chars[j]));
            if boundary {
                count += 1;
                in_sentence = false;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if in_sentence {
        count += 1;
    }
    count
}
