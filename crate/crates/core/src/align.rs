//! Mapping extracted phrases back to character spans.
//!
//! Phrases are searched inside the section they were extracted from and
//! shifted into document coordinates. Overlapping candidates are resolved in
//! favour of the shorter span, across trigger types.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Mention, TriggerType};
use crate::llm::PhraseSet;
use crate::segment::Section;
use crate::text::NormalizationPolicy;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Dict,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub start: usize,
    pub end: usize,
    pub kind: TriggerType,
    pub source: Source,
}

/// Anything with a half-open char range and a trigger type.
pub trait Span {
    fn range(&self) -> (usize, usize);
    fn kind(&self) -> TriggerType;

    fn span_len(&self) -> usize {
        let (s, e) = self.range();
        e - s
    }

    fn overlaps_span<S: Span + ?Sized>(&self, other: &S) -> bool {
        let (a0, a1) = self.range();
        let (b0, b1) = other.range();
        a0 < b1 && b0 < a1
    }
}

impl Span for CandidateSpan {
    fn range(&self) -> (usize, usize) {
        (self.start, self.end)
    }
    fn kind(&self) -> TriggerType {
        self.kind
    }
}

impl Span for Mention {
    fn range(&self) -> (usize, usize) {
        (self.start, self.end)
    }
    fn kind(&self) -> TriggerType {
        self.kind
    }
}

/// All non-overlapping occurrences of `phrase` in `text`, scanning left to
/// right. Returned offsets are chars in `text`.
pub fn find_occurrences(text: &str, phrase: &str, policy: NormalizationPolicy) -> Vec<(usize, usize)> {
    let hay: Vec<char> = text.chars().map(|c| policy.normalize_char(c)).collect();
    let needle: Vec<char> = phrase.chars().map(|c| policy.normalize_char(c)).collect();
    let mut found = Vec::new();
    if needle.is_empty() || needle.len() > hay.len() {
        return found;
    }
    let mut i = 0;
    while i + needle.len() <= hay.len() {
        let end = i + needle.len();
        if hay[i..end] == needle[..] && policy.accepts(&hay, i, end) {
            found.push((i, end));
            i = end;
        } else {
            i += 1;
        }
    }
    found
}

/// A phrase returned by the model that does not occur in its section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinatedPhrase {
    pub section: usize,
    pub kind: TriggerType,
    pub phrase: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    /// Deduplicated candidates, in discovery order.
    pub spans: Vec<CandidateSpan>,
    pub hallucinated: Vec<HallucinatedPhrase>,
}

/// Locates every phrase of every section's [`PhraseSet`] within that section.
pub fn align_phrases(per_section: &[(Section, PhraseSet)], policy: NormalizationPolicy) -> Alignment {
    let mut out = Alignment::default();
    let mut seen = BTreeSet::new();
    for (index, (section, phrases)) in per_section.iter().enumerate() {
        for kind in TriggerType::ALL {
            for phrase in phrases.get(kind) {
                let hits = find_occurrences(&section.text, phrase, policy);
                if hits.is_empty() {
                    out.hallucinated.push(HallucinatedPhrase {
                        section: index,
                        kind,
                        phrase: phrase.clone(),
                    });
                }
                for (s, e) in hits {
                    let span = CandidateSpan {
                        start: section.start + s,
                        end: section.start + e,
                        kind,
                        source: Source::Llm,
                    };
                    if seen.insert((span.start, span.end, kind)) {
                        out.spans.push(span);
                    }
                }
            }
        }
    }
    out
}

/// Greedy shorter-span selection.
///
/// Items are ranked by (length, start, type name) and kept when they overlap
/// nothing kept so far, whatever the type. Exact `(start, end, type)`
/// duplicates collapse to the first one ranked. The result is sorted by
/// `(start, end)`.
pub fn select_shortest<T: Span + Clone>(items: &[T]) -> Vec<T> {
    let mut ranked: Vec<&T> = items.iter().collect();
    ranked.sort_by(|a, b| {
        let (a0, _) = a.range();
        let (b0, _) = b.range();
        (a.span_len(), a0, a.kind().as_str()).cmp(&(b.span_len(), b0, b.kind().as_str()))
    });
    let mut kept: Vec<&T> = Vec::new();
    for item in ranked {
        if !kept.iter().any(|k| k.overlaps_span(item)) {
            kept.push(item);
        }
    }
    kept.sort_by_key(|k| k.range());
    kept.into_iter().cloned().collect()
}

/// Resolves overlapping candidates to non-overlapping mentions of `doc`.
pub fn resolve_overlaps(doc: &Document, spans: &[CandidateSpan]) -> Result<Vec<Mention>> {
    select_shortest(spans)
        .into_iter()
        .map(|s| Mention::from_document(doc, s.kind, s.start, s.end))
        .collect()
}
