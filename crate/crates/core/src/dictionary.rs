//! Surface-form dictionary baseline.
//!
//! The dictionary is harvested from gold training mentions. A surface is kept
//! only when every labeled occurrence agrees on one trigger type and a large
//! enough share of its occurrences in the training texts is labeled at all.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use aho_corasick::{AhoCorasick, MatchKind};

use crate::corpus::{Corpus, Document, Mention, TriggerType};
use crate::text::{CharIndex, NormalizationPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Dictionary {
    entries: BTreeMap<String, TriggerType>,
    policy: NormalizationPolicy,
    keys: Vec<String>,
    matcher: Option<AhoCorasick>,
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.policy == other.policy
    }
}

impl Dictionary {
    /// Builds a dictionary from explicit entries. Keys are normalized with
    /// `policy`; blank keys and keys that normalize to conflicting types are
    /// rejected.
    pub fn from_entries<I, S>(entries: I, policy: NormalizationPolicy) -> Result<Self>
    where
        I: IntoIterator<Item = (S, TriggerType)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (surface, kind) in entries {
            let key = policy.normalize(surface.as_ref());
            if key.trim().is_empty() {
                return Err(Error::InvalidArgument("dictionary entry is blank".into()));
            }
            if let Some(prev) = map.insert(key.clone(), kind) {
                if prev != kind {
                    return Err(Error::InvalidArgument(format!(
                        "dictionary entry `{key}` maps to both {prev} and {kind}"
                    )));
                }
            }
        }
        Ok(Self::assemble(map, policy))
    }

    fn assemble(entries: BTreeMap<String, TriggerType>, policy: NormalizationPolicy) -> Self {
        let keys: Vec<String> = entries.keys().cloned().collect();
        let matcher = (!keys.is_empty()).then(|| {
            AhoCorasick::builder()
                .match_kind(MatchKind::Standard)
                .build(&keys)
                .expect("dictionary automaton fits in memory")
        });
        Self {
            entries,
            policy,
            keys,
            matcher,
        }
    }

    pub fn policy(&self) -> NormalizationPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, TriggerType> {
        &self.entries
    }

    /// Type of a surface, normalizing it first.
    pub fn lookup(&self, surface: &str) -> Option<TriggerType> {
        self.entries.get(&self.policy.normalize(surface)).copied()
    }

    /// Every boundary-valid occurrence of every entry in `text`, overlapping
    /// matches included, as `(start, end, key index)` in chars.
    fn raw_matches(&self, text: &str) -> Vec<(usize, usize, usize)> {
        let Some(matcher) = &self.matcher else {
            return Vec::new();
        };
        let normalized = self.policy.normalize(text);
        let index = CharIndex::new(&normalized);
        let chars: Vec<char> = normalized.chars().collect();
        matcher
            .find_overlapping_iter(&normalized)
            .filter_map(|m| {
                let start = index.char_offset(m.start())?;
                let end = index.char_offset(m.end())?;
                self.policy
                    .accepts(&chars, start, end)
                    .then_some((start, end, m.pattern().as_usize()))
            })
            .collect()
    }

    /// Serializes as a header line with the policy followed by one
    /// `surface<TAB>TYPE` line per entry, sorted by surface.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# case_fold={} require_word_boundary={}\n",
            self.policy.case_fold, self.policy.require_word_boundary
        );
        for (surface, kind) in &self.entries {
            let _ = writeln!(out, "{surface}\t{kind}");
        }
        out
    }

    /// Parses the format written by [`Dictionary::to_text`]. Without a header
    /// line the default policy is assumed.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut policy = NormalizationPolicy::default();
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix("# ") {
                for setting in header.split_whitespace() {
                    let (key, value) = setting.split_once('=').ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("bad header setting `{setting}`"),
                    })?;
                    let value: bool = value.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("`{key}` expects true or false"),
                    })?;
                    match key {
                        "case_fold" => policy.case_fold = value,
                        "require_word_boundary" => policy.require_word_boundary = value,
                        _ => {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!("unknown setting `{key}`"),
                            })
                        }
                    }
                }
                continue;
            }
            let (surface, kind) = line.rsplit_once('\t').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `surface<TAB>TYPE`".into(),
            })?;
            let kind: TriggerType = kind.parse().map_err(|e: Error| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            entries.push((surface.to_owned(), kind));
        }
        Self::from_entries(entries, policy)
    }
}

/// Per-surface tallies gathered while building a dictionary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SurfaceCounts {
    pub labeled: BTreeMap<TriggerType, usize>,
    pub occurrences: usize,
}

impl SurfaceCounts {
    pub fn labeled_total(&self) -> usize {
        self.labeled.values().sum()
    }

    /// Share of occurrences that carry a label. Gold mentions the matcher
    /// cannot see (e.g. inside a word) still count as occurrences.
    pub fn label_ratio(&self) -> f64 {
        let labeled = self.labeled_total();
        let total = self.occurrences.max(labeled);
        if total == 0 {
            0.0
        } else {
            labeled as f64 / total as f64
        }
    }
}

/// Counts labeled and total occurrences for every gold surface in `train`.
pub fn surface_counts(train: &Corpus, policy: NormalizationPolicy) -> BTreeMap<String, SurfaceCounts> {
    let mut counts: BTreeMap<String, SurfaceCounts> = BTreeMap::new();
    for m in train.all_gold() {
        let key = policy.normalize(&m.surface);
        if key.trim().is_empty() {
            continue;
        }
        *counts.entry(key).or_default().labeled.entry(m.kind).or_default() += 1;
    }
    if counts.is_empty() {
        return counts;
    }
    // Scan with a throwaway dictionary over all surfaces; its types are unused.
    let probe = Dictionary::assemble(counts.keys().map(|k| (k.clone(), TriggerType::Drug)).collect(), policy);
    for doc in train.documents() {
        for (_, _, key) in probe.raw_matches(doc.text()) {
            if let Some(c) = counts.get_mut(&probe.keys[key]) {
                c.occurrences += 1;
            }
        }
    }
    counts
}

/// Builds the baseline dictionary from the gold mentions of `train`.
///
/// A surface is included with its type iff all labeled occurrences agree on
/// one type and `labeled / occurrences >= min_label_ratio`.
pub fn build_dictionary(train: &Corpus, policy: NormalizationPolicy, min_label_ratio: f64) -> Result<Dictionary> {
    if !(0.0..=1.0).contains(&min_label_ratio) {
        return Err(Error::InvalidArgument(format!(
            "min_label_ratio {min_label_ratio} is outside [0, 1]"
        )));
    }
    if !train.has_gold() {
        return Err(Error::Corpus(
            "dictionary training corpus has no gold annotations".into(),
        ));
    }
    let entries = surface_counts(train, policy)
        .into_iter()
        .filter_map(|(surface, counts)| {
            let mut types = counts.labeled.keys();
            let (Some(&kind), None) = (types.next(), types.next()) else {
                log::debug!("dictionary: `{surface}` has conflicting types");
                return None;
            };
            if counts.label_ratio() < min_label_ratio {
                log::debug!(
                    "dictionary: `{surface}` labeled {}/{}",
                    counts.labeled_total(),
                    counts.occurrences
                );
                return None;
            }
            Some((surface, kind))
        })
        .collect();
    Ok(Dictionary::assemble(entries, policy))
}

/// Tags every dictionary occurrence in `doc`. Overlaps go to the longer
/// match, then to the earlier start. Output is sorted by `(start, end)`.
pub fn dict_extract(doc: &Document, dict: &Dictionary) -> Vec<Mention> {
    let mut matches = dict.raw_matches(doc.text());
    matches.sort_by(|a, b| (b.1 - b.0, a.0).cmp(&(a.1 - a.0, b.0)));
    let mut kept: Vec<(usize, usize, usize)> = Vec::new();
    for m in matches {
        if !kept.iter().any(|k| m.0 < k.1 && k.0 < m.1) {
            kept.push(m);
        }
    }
    kept.sort();
    kept.into_iter()
        .map(|(start, end, key)| {
            Mention::from_document(doc, dict.entries[&dict.keys[key]], start, end)
                .expect("matches lie within the document")
        })
        .collect()
}
