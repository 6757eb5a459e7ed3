//! Hybrid predictions from dictionary and LLM mentions of one document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::{select_shortest, Span};
use crate::corpus::Mention;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombinePolicy {
    /// Pool both lists and keep the shorter of any overlapping spans.
    #[default]
    UnionShorter,
    /// Keep all dictionary mentions and add LLM mentions that overlap none.
    DictPriority,
    /// Keep all LLM mentions and add dictionary mentions that overlap none.
    LlmPriority,
}

impl CombinePolicy {
    pub const ALL: [CombinePolicy; 3] = [
        CombinePolicy::UnionShorter,
        CombinePolicy::DictPriority,
        CombinePolicy::LlmPriority,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CombinePolicy::UnionShorter => "union-shorter",
            CombinePolicy::DictPriority => "dict-priority",
            CombinePolicy::LlmPriority => "llm-priority",
        }
    }
}

impl fmt::Display for CombinePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombinePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        CombinePolicy::ALL
            .into_iter()
            .find(|p| p.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown combine policy `{s}`")))
    }
}

/// Merges two internally non-overlapping mention lists of the same document.
/// The result is sorted by `(start, end)` and pairwise non-overlapping.
pub fn combine(dict: &[Mention], llm: &[Mention], policy: CombinePolicy) -> Result<Vec<Mention>> {
    if let Some(first) = dict.first().or(llm.first()) {
        if let Some(other) = dict.iter().chain(llm).find(|m| m.doc_id != first.doc_id) {
            return Err(Error::CrossDocument(first.doc_id.clone(), other.doc_id.clone()));
        }
    }
    let mut out = match policy {
        CombinePolicy::UnionShorter => {
            let pooled: Vec<Mention> = dict.iter().chain(llm).cloned().collect();
            return Ok(select_shortest(&pooled));
        }
        CombinePolicy::DictPriority => prioritized(dict, llm),
        CombinePolicy::LlmPriority => prioritized(llm, dict),
    };
    out.sort();
    out.dedup();
    Ok(out)
}

fn prioritized(primary: &[Mention], secondary: &[Mention]) -> Vec<Mention> {
    let mut out = primary.to_vec();
    out.extend(
        secondary
            .iter()
            .filter(|m| !primary.iter().any(|p| p.overlaps_span(*m)))
            .cloned(),
    );
    out
}
