//! Corpus-level runs: dictionary or LLM extraction over every document,
//! prediction files, and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_phrases, resolve_overlaps, HallucinatedPhrase};
use crate::corpus::{parse_standoff, write_standoff, Corpus, Document, Mention};
use crate::dictionary::{dict_extract, Dictionary};
use crate::llm::{llm_extract_document, CompletionClient, ExtractConfig, FewShotExample, PromptTemplate};
use crate::text::NormalizationPolicy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Dict,
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedSection {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentDiagnostics {
    pub doc_id: String,
    pub sections: usize,
    pub failed_sections: Vec<FailedSection>,
    pub hallucinated: Vec<HallucinatedPhrase>,
    pub candidates: usize,
    pub overlaps_resolved: usize,
    pub mentions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionRun {
    pub predictions: BTreeMap<String, Vec<Mention>>,
    /// In document order.
    pub diagnostics: Vec<DocumentDiagnostics>,
}

impl ExtractionRun {
    pub fn failed_documents(&self) -> Vec<&str> {
        self.diagnostics
            .iter()
            .filter(|d| !d.failed_sections.is_empty())
            .map(|d| d.doc_id.as_str())
            .collect()
    }

    pub fn is_clean(&self) -> bool {
        self.failed_documents().is_empty()
    }
}

pub fn run_dictionary(corpus: &Corpus, dict: &Dictionary) -> ExtractionRun {
    let results: Vec<(Vec<Mention>, DocumentDiagnostics)> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let ms = dict_extract(doc, dict);
            let diag = DocumentDiagnostics {
                doc_id: doc.id().to_owned(),
                candidates: ms.len(),
                mentions: ms.len(),
                ..Default::default()
            };
            (ms, diag)
        })
        .collect();
    collect_run(results)
}

/// Extracts, aligns and resolves one document.
pub fn extract_document(
    doc: &Document,
    cfg: &ExtractConfig,
    template: &PromptTemplate,
    examples: &[FewShotExample],
    client: &dyn CompletionClient,
    policy: NormalizationPolicy,
) -> Result<(Vec<Mention>, DocumentDiagnostics)> {
    let outcomes = llm_extract_document(doc, &cfg.request(), template, examples, client)?;
    let failed_sections = outcomes
        .iter()
        .enumerate()
        .filter_map(|(index, o)| {
            o.failure.as_ref().map(|error| FailedSection {
                index,
                start: o.section.start,
                end: o.section.end,
                error: error.clone(),
            })
        })
        .collect();
    let per_section: Vec<_> = outcomes.into_iter().map(|o| (o.section, o.phrases)).collect();
    let alignment = align_phrases(&per_section, policy);
    let mentions = resolve_overlaps(doc, &alignment.spans)?;
    let diag = DocumentDiagnostics {
        doc_id: doc.id().to_owned(),
        sections: per_section.len(),
        failed_sections,
        hallucinated: alignment.hallucinated,
        candidates: alignment.spans.len(),
        overlaps_resolved: alignment.spans.len() - mentions.len(),
        mentions: mentions.len(),
    };
    Ok((mentions, diag))
}

/// Runs LLM extraction over a corpus with at most `cfg.parallelism`
/// documents in flight. Output order does not depend on scheduling.
pub fn run_llm(
    corpus: &Corpus,
    cfg: &ExtractConfig,
    template: &PromptTemplate,
    examples: &[FewShotExample],
    client: &dyn CompletionClient,
    policy: NormalizationPolicy,
) -> Result<ExtractionRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<(Vec<Mention>, DocumentDiagnostics)> = pool.install(|| {
        corpus
            .documents()
            .par_iter()
            .map(|doc| extract_document(doc, cfg, template, examples, client, policy))
            .collect::<Result<_>>()
    })?;
    Ok(collect_run(results))
}

fn collect_run(results: Vec<(Vec<Mention>, DocumentDiagnostics)>) -> ExtractionRun {
    let mut run = ExtractionRun::default();
    for (ms, diag) in results {
        run.predictions.insert(diag.doc_id.clone(), ms);
        run.diagnostics.push(diag);
    }
    run
}

/// Writes one `<id>.ann` per document of `corpus`, empty when there are no
/// predictions for it.
pub fn write_predictions(dir: &Path, corpus: &Corpus, predictions: &BTreeMap<String, Vec<Mention>>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for doc in corpus.documents() {
        let ms = predictions.get(doc.id()).map(Vec::as_slice).unwrap_or_default();
        let path = dir.join(format!("{}.ann", doc.id()));
        fs::write(&path, write_standoff(ms)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads every `.ann` file in `dir`, validating it against the matching
/// document of `corpus`.
pub fn load_predictions(dir: &Path, corpus: &Corpus) -> Result<BTreeMap<String, Vec<Mention>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("ann") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let doc = corpus.document(id).ok_or_else(|| {
            Error::Corpus(format!(
                "{}: no document `{id}` in the reference corpus",
                path.display()
            ))
        })?;
        let ann = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut ms = parse_standoff(&ann, doc)?;
        ms.sort();
        out.insert(id.to_owned(), ms);
    }
    Ok(out)
}

/// Where model answers came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    None,
    Http { url: String },
    Replay { path: String },
    Record { url: String, path: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub documents: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub documents: usize,
    pub mentions: usize,
    pub failed_documents: Vec<String>,
    pub failed_sections: usize,
    pub hallucinated_phrases: usize,
    pub overlaps_resolved: usize,
}

/// Everything needed to rerun an extraction with the replay backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub config: ExtractConfig,
    pub template: Option<PromptTemplate>,
    pub alignment_policy: NormalizationPolicy,
    pub backend: Backend,
    pub input: InputDigest,
    pub train: Option<InputDigest>,
    pub dictionary: Option<InputDigest>,
    pub examples: Vec<String>,
    pub summary: RunSummary,
    pub documents: Vec<DocumentDiagnostics>,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
}

impl RunManifest {
    pub fn summarize(run: &ExtractionRun) -> RunSummary {
        RunSummary {
            documents: run.diagnostics.len(),
            mentions: run.predictions.values().map(Vec::len).sum(),
            failed_documents: run.failed_documents().into_iter().map(str::to_owned).collect(),
            failed_sections: run.diagnostics.iter().map(|d| d.failed_sections.len()).sum(),
            hallucinated_phrases: run.diagnostics.iter().map(|d| d.hallucinated.len()).sum(),
            overlaps_resolved: run.diagnostics.iter().map(|d| d.overlaps_resolved).sum(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}
