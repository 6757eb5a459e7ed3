//! Standoff corpora: documents, trigger mentions, splits and statistics.
//!
//! A corpus directory holds `<id>.txt` files with the raw case reports and,
//! for annotated splits, `<id>.ann` files with one trigger per line:
//!
//! ```text
//! T1<TAB>TOBACCO 13 23<TAB>tabaquismo
//! ```
//!
//! Offsets are half-open and count Unicode scalar values.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::segment;
use crate::text::CharIndex;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TriggerType {
    Tobacco,
    Alcohol,
    Cannabis,
    Drug,
}

impl TriggerType {
    pub const ALL: [TriggerType; 4] = [
        TriggerType::Tobacco,
        TriggerType::Alcohol,
        TriggerType::Cannabis,
        TriggerType::Drug,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TriggerType::Tobacco => "TOBACCO",
            TriggerType::Alcohol => "ALCOHOL",
            TriggerType::Cannabis => "CANNABIS",
            TriggerType::Drug => "DRUG",
        }
    }

    /// Lowercase key used in the structured LLM output.
    pub fn key(self) -> &'static str {
        match self {
            TriggerType::Tobacco => "tobacco",
            TriggerType::Alcohol => "alcohol",
            TriggerType::Cannabis => "cannabis",
            TriggerType::Drug => "drug",
        }
    }
}

impl fmt::Display for TriggerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TriggerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TriggerType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown trigger type `{s}`")))
    }
}

/// Maps `.ann` tag strings to trigger types. Tags not in the map are treated
/// as non-trigger annotations and skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMap(HashMap<String, TriggerType>);

impl Default for TagMap {
    fn default() -> Self {
        Self(
            TriggerType::ALL
                .into_iter()
                .map(|t| (t.as_str().to_owned(), t))
                .collect(),
        )
    }
}

impl TagMap {
    pub fn empty() -> Self {
        Self(HashMap::new())
    }

    pub fn with(mut self, tag: impl Into<String>, kind: TriggerType) -> Self {
        self.0.insert(tag.into(), kind);
        self
    }

    pub fn get(&self, tag: &str) -> Option<TriggerType> {
        self.0.get(tag).copied()
    }
}

/// A clinical case report. All mention offsets reference `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    text: String,
    index: CharIndex,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Corpus("document id must not be empty".into()));
        }
        let text = text.into();
        let index = CharIndex::new(&text);
        Ok(Self { id, text, index })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in chars.
    pub fn len(&self) -> usize {
        self.index.char_len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn char_index(&self) -> &CharIndex {
        &self.index
    }

    /// The text between two char offsets.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        self.index.slice(&self.text, start, end)
    }
}

/// A typed trigger span within one document.
///
/// Field order gives the derived ordering: document, then `(start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub kind: TriggerType,
    pub surface: String,
}

impl Mention {
    /// Builds a mention whose surface is read from the document.
    pub fn from_document(doc: &Document, kind: TriggerType, start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::Integrity {
                id: format!("{}:{start}-{end}", doc.id()),
                message: "empty or inverted span".into(),
            });
        }
        let surface = doc.slice(start, end).ok_or_else(|| Error::Integrity {
            id: format!("{}:{start}-{end}", doc.id()),
            message: format!("span exceeds document length {}", doc.len()),
        })?;
        Ok(Self {
            doc_id: doc.id().to_owned(),
            start,
            end,
            kind,
            surface: surface.to_owned(),
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Checks that the surface is exactly the document slice at the offsets.
    pub fn validate(&self, doc: &Document) -> Result<()> {
        let fail = |message: String| Error::Integrity {
            id: format!("{}:{}-{}", self.doc_id, self.start, self.end),
            message,
        };
        if self.doc_id != doc.id() {
            return Err(fail(format!("belongs to `{}`, not `{}`", self.doc_id, doc.id())));
        }
        if self.start >= self.end {
            return Err(fail("empty or inverted span".into()));
        }
        match doc.slice(self.start, self.end) {
            Some(s) if s == self.surface => Ok(()),
            Some(s) => Err(fail(format!("surface `{}` does not match text `{s}`", self.surface))),
            None => Err(fail(format!("span exceeds document length {}", doc.len()))),
        }
    }
}

/// Parses the trigger lines of an `.ann` file using the default tag names.
pub fn parse_standoff(ann: &str, doc: &Document) -> Result<Vec<Mention>> {
    parse_standoff_with(ann, doc, &TagMap::default())
}

pub fn parse_standoff_with(ann: &str, doc: &Document, tags: &TagMap) -> Result<Vec<Mention>> {
    let ann = ann.strip_prefix('\u{feff}').unwrap_or(ann);
    let mut mentions = Vec::new();
    for (i, raw) in ann.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with('T') {
            log::debug!("{}: line {line_no}: skipping non-trigger annotation", doc.id());
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let mut fields = line.splitn(3, '\t');
        let id = fields.next().unwrap_or_default();
        let (Some(header), Some(surface)) = (fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected three tab-separated fields in `{line}`")));
        };
        if id.len() < 2 || !id[1..].bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(format!("bad annotation id `{id}`")));
        }
        let mut parts = header.split(' ');
        let tag = parts.next().unwrap_or_default();
        let Some(kind) = tags.get(tag) else {
            log::debug!(
                "{}: line {line_no}: skipping annotation {id} with tag `{tag}`",
                doc.id()
            );
            continue;
        };
        let offsets: Vec<&str> = parts.collect();
        if offsets.iter().any(|p| p.contains(';')) {
            return Err(parse_err(format!("{id}: discontinuous spans are not supported")));
        }
        let [start, end] = offsets[..] else {
            return Err(parse_err(format!("{id}: expected `TYPE start end`, got `{header}`")));
        };
        let start: usize = start
            .parse()
            .map_err(|_| parse_err(format!("{id}: bad start offset `{start}`")))?;
        let end: usize = end
            .parse()
            .map_err(|_| parse_err(format!("{id}: bad end offset `{end}`")))?;
        let mention = Mention {
            doc_id: doc.id().to_owned(),
            start,
            end,
            kind,
            surface: surface.to_owned(),
        };
        mention.validate(doc).map_err(|e| match e {
            Error::Integrity { message, .. } => Error::Integrity {
                id: format!("{}/{id}", doc.id()),
                message,
            },
            other => other,
        })?;
        mentions.push(mention);
    }
    Ok(mentions)
}

/// Serializes mentions of a single document, numbering ids from `T1` in
/// input order. Empty input yields an empty string; otherwise every line,
/// including the last, ends with `\n`.
pub fn write_standoff(mentions: &[Mention]) -> Result<String> {
    let mut out = String::new();
    for (i, m) in mentions.iter().enumerate() {
        if let Some(first) = mentions.first() {
            if first.doc_id != m.doc_id {
                return Err(Error::CrossDocument(first.doc_id.clone(), m.doc_id.clone()));
            }
        }
        let bad = |message: &str| Error::Integrity {
            id: format!("T{}", i + 1),
            message: message.to_owned(),
        };
        if m.start >= m.end {
            return Err(bad("empty or inverted span"));
        }
        if m.surface.chars().count() != m.end - m.start {
            return Err(bad("surface length disagrees with offsets"));
        }
        if m.surface.contains(['\n', '\r', '\t']) {
            return Err(bad("surface contains a line break or tab"));
        }
        out.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            m.kind,
            m.start,
            m.end,
            m.surface
        ));
    }
    Ok(out)
}

/// A set of documents with optional gold annotations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    gold: Option<BTreeMap<String, Vec<Mention>>>,
}

impl Corpus {
    /// Builds a corpus, sorting documents by id and validating every gold
    /// mention against its document.
    pub fn new(mut documents: Vec<Document>, gold: Option<BTreeMap<String, Vec<Mention>>>) -> Result<Self> {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = documents.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Corpus(format!("duplicate document id `{}`", w[0].id)));
        }
        let mut corpus = Self { documents, gold: None };
        if let Some(mut gold) = gold {
            for (id, mentions) in gold.iter_mut() {
                let doc = corpus
                    .document(id)
                    .ok_or_else(|| Error::Corpus(format!("gold annotations for unknown document `{id}`")))?;
                for m in mentions.iter() {
                    m.validate(doc)?;
                }
                mentions.sort();
            }
            corpus.gold = Some(gold);
        }
        Ok(corpus)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn has_gold(&self) -> bool {
        self.gold.is_some()
    }

    pub fn gold(&self) -> Option<&BTreeMap<String, Vec<Mention>>> {
        self.gold.as_ref()
    }

    /// Gold mentions of one document, sorted; empty when unannotated.
    pub fn gold_for(&self, id: &str) -> &[Mention] {
        self.gold
            .as_ref()
            .and_then(|g| g.get(id))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    /// All gold mentions across documents, in document order.
    pub fn all_gold(&self) -> Vec<Mention> {
        self.documents
            .iter()
            .flat_map(|d| self.gold_for(d.id()).iter().cloned())
            .collect()
    }

    /// SHA-256 over document ids and texts, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for doc in &self.documents {
            hasher.update(doc.id.as_bytes());
            hasher.update([0]);
            hasher.update(doc.text.as_bytes());
            hasher.update([0]);
        }
        hex::encode(hasher.finalize())
    }

    fn subset(&self, ids: &[&str]) -> Corpus {
        let documents: Vec<Document> = ids.iter().filter_map(|id| self.document(id).cloned()).collect();
        let gold = self.gold.as_ref().map(|g| {
            ids.iter()
                .filter_map(|id| g.get(*id).map(|ms| ((*id).to_owned(), ms.clone())))
                .collect()
        });
        // Already validated against the same documents.
        Corpus::new(documents, gold).expect("subset of a valid corpus is valid")
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, e.utf8_error()),
        )
    })?;
    Ok(match text.strip_prefix('\u{feff}') {
        Some(rest) => rest.to_owned(),
        None => text,
    })
}

/// Loads `<id>.txt` files (and `<id>.ann` files when `with_gold`) from a
/// directory. Documents are ordered by id.
pub fn load_corpus(dir: &Path, with_gold: bool) -> Result<Corpus> {
    load_corpus_with(dir, with_gold, &TagMap::default())
}

pub fn load_corpus_with(dir: &Path, with_gold: bool, tags: &TagMap) -> Result<Corpus> {
    let mut texts: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut anns: BTreeMap<String, PathBuf> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let (Some(stem), Some(ext)) = (path.file_stem().and_then(|s| s.to_str()), path.extension()) else {
            continue;
        };
        let target = match ext.to_str() {
            Some("txt") => &mut texts,
            Some("ann") => &mut anns,
            _ => continue,
        };
        if target.insert(stem.to_owned(), path.clone()).is_some() {
            return Err(Error::Corpus(format!("duplicate document id `{stem}`")));
        }
    }

    if with_gold {
        let missing: Vec<&str> = texts
            .keys()
            .filter(|id| !anns.contains_key(*id))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Corpus(format!("missing .ann for: {}", missing.join(", "))));
        }
        let orphans: Vec<&str> = anns
            .keys()
            .filter(|id| !texts.contains_key(*id))
            .map(String::as_str)
            .collect();
        if !orphans.is_empty() {
            return Err(Error::Corpus(format!(
                "orphan .ann without .txt: {}",
                orphans.join(", ")
            )));
        }
    }

    let loaded: Vec<(Document, Option<Vec<Mention>>)> = texts
        .par_iter()
        .map(|(id, path)| {
            let doc = Document::new(id.clone(), read_utf8(path)?)?;
            let gold = if with_gold {
                let ann_path = &anns[id];
                let ann = read_utf8(ann_path)?;
                Some(parse_standoff_with(&ann, &doc, tags).map_err(|e| match e {
                    Error::Parse { line, message } => Error::Parse {
                        line,
                        message: format!("{}: {message}", ann_path.display()),
                    },
                    other => other,
                })?)
            } else {
                None
            };
            Ok((doc, gold))
        })
        .collect::<Result<_>>()?;

    let mut documents = Vec::with_capacity(loaded.len());
    let mut gold = BTreeMap::new();
    for (doc, mentions) in loaded {
        if let Some(ms) = mentions {
            gold.insert(doc.id().to_owned(), ms);
        }
        documents.push(doc);
    }
    Corpus::new(documents, with_gold.then_some(gold))
}

/// Writes `<id>.txt` for every document and `<id>.ann` when gold is present.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in corpus.documents() {
        let txt = dir.join(format!("{}.txt", doc.id()));
        fs::write(&txt, doc.text()).map_err(|e| Error::io(&txt, e))?;
        if corpus.has_gold() {
            let ann = dir.join(format!("{}.ann", doc.id()));
            fs::write(&ann, write_standoff(corpus.gold_for(doc.id()))?).map_err(|e| Error::io(&ann, e))?;
        }
    }
    Ok(())
}

/// Deterministically partitions a corpus into `(rest, holdout)`.
pub fn split_corpus(corpus: &Corpus, n_holdout: usize, seed: u64) -> Result<(Corpus, Corpus)> {
    if n_holdout == 0 || n_holdout >= corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "holdout size {n_holdout} must be in 1..{} for a corpus of {} documents",
            corpus.len(),
            corpus.len()
        )));
    }
    let mut ids: Vec<&str> = corpus.documents().iter().map(Document::id).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (holdout, rest) = ids.split_at(n_holdout);
    Ok((corpus.subset(rest), corpus.subset(holdout)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub n_documents: usize,
    pub n_sentences: usize,
    pub n_mentions: usize,
    pub per_type: BTreeMap<TriggerType, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut per_type: BTreeMap<TriggerType, usize> = TriggerType::ALL.into_iter().map(|t| (t, 0)).collect();
    for doc in corpus.documents() {
        for m in corpus.gold_for(doc.id()) {
            *per_type.entry(m.kind).or_default() += 1;
        }
    }
    CorpusStats {
        n_documents: corpus.len(),
        n_sentences: corpus
            .documents()
            .iter()
            .map(|d| segment::count_sentences(d.text()))
            .sum(),
        n_mentions: per_type.values().sum(),
        per_type,
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16}{:>10}", "Characteristic", "Value")?;
        writeln!(f, "{:<16}{:>10}", "# Mentions", self.n_mentions)?;
        writeln!(f, "{:<16}{:>10}", "# Documents", self.n_documents)?;
        writeln!(f, "{:<16}{:>10}", "# Sentences", self.n_sentences)?;
        writeln!(f)?;
        writeln!(f, "{:>10}{:>10}{:>10}{:>10}", "Tobacco", "Alcohol", "Cannabis", "Drug")?;
        let count = |t| self.per_type.get(&t).copied().unwrap_or(0);
        writeln!(
            f,
            "{:>10}{:>10}{:>10}{:>10}",
            count(TriggerType::Tobacco),
            count(TriggerType::Alcohol),
            count(TriggerType::Cannabis),
            count(TriggerType::Drug)
        )
    }
}
