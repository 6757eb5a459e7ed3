//! Zero- and few-shot trigger extraction with a chat-completion model.
//!
//! A document is split into sections, each section is sent with the same
//! sampled demonstrations, and the model answers with one phrase list per
//! trigger type. Phrases are mapped back to spans by [`crate::align`].

mod client;
mod config;
mod prompt;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use self::client::{
    load_replay_file, write_replay_file, ChatRequest, ClientError, CompletionClient, HttpClient, RecordingClient,
    ReplayClient, API_KEY_ENV,
};
pub use self::config::{ExtractConfig, LlmRequestConfig};
pub use self::prompt::{render_prompt, response_schema, Message, PromptTemplate, Role};

use crate::corpus::{Corpus, Document, TriggerType};
use crate::segment::{segment_sections, Section};
use crate::{Error, Result};

/// One phrase list per trigger type, as returned by the model for a section.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseSet {
    pub tobacco: Vec<String>,
    pub alcohol: Vec<String>,
    pub cannabis: Vec<String>,
    pub drug: Vec<String>,
}

impl PhraseSet {
    pub fn get(&self, kind: TriggerType) -> &[String] {
        match kind {
            TriggerType::Tobacco => &self.tobacco,
            TriggerType::Alcohol => &self.alcohol,
            TriggerType::Cannabis => &self.cannabis,
            TriggerType::Drug => &self.drug,
        }
    }

    pub fn get_mut(&mut self, kind: TriggerType) -> &mut Vec<String> {
        match kind {
            TriggerType::Tobacco => &mut self.tobacco,
            TriggerType::Alcohol => &mut self.alcohol,
            TriggerType::Cannabis => &mut self.cannabis,
            TriggerType::Drug => &mut self.drug,
        }
    }

    pub fn len(&self) -> usize {
        TriggerType::ALL.iter().map(|&t| self.get(t).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assertion status requested by the assertion-aware prompt variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assertion {
    Affirmed,
    Negated,
}

/// Parses the model's structured answer.
///
/// The payload must be a JSON object with the four lists `tobacco`,
/// `alcohol`, `cannabis` and `drug`. Items are strings, or with the assertion
/// variant `{"phrase": ..., "assertion": "affirmed" | "negated"}` objects
/// whose labels are validated and then dropped: negated triggers are still
/// mentions. Phrases are trimmed and blank ones discarded.
pub fn parse_response(raw: &str, assertion_variant: bool) -> Result<PhraseSet> {
    let fail = |message: String| Error::Response {
        message,
        payload: raw.to_owned(),
    };
    let body = strip_code_fence(raw);
    let value: Value = serde_json::from_str(body).map_err(|e| fail(format!("not JSON: {e}")))?;
    let object = value.as_object().ok_or_else(|| fail("expected a JSON object".into()))?;
    let mut out = PhraseSet::default();
    for kind in TriggerType::ALL {
        let items = object
            .get(kind.key())
            .ok_or_else(|| fail(format!("missing `{}` list", kind.key())))?
            .as_array()
            .ok_or_else(|| fail(format!("`{}` is not a list", kind.key())))?;
        for item in items {
            let phrase = if assertion_variant {
                let phrase = item.get("phrase").and_then(Value::as_str);
                let assertion = item
                    .get("assertion")
                    .cloned()
                    .and_then(|a| serde_json::from_value::<Assertion>(a).ok());
                match (phrase, assertion) {
                    (Some(p), Some(_)) => p,
                    _ => return Err(fail(format!("`{}` item lacks phrase or assertion: {item}", kind.key()))),
                }
            } else {
                item.as_str()
                    .ok_or_else(|| fail(format!("`{}` item is not a string: {item}", kind.key())))?
            };
            let phrase = phrase.trim();
            if !phrase.is_empty() {
                out.get_mut(kind).push(phrase.to_owned());
            }
        }
    }
    Ok(out)
}

fn strip_code_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

/// A demonstration drawn from the training split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FewShotExample {
    pub doc_id: String,
    pub text: String,
    pub gold: PhraseSet,
    /// Phrases whose every gold occurrence follows a negation cue; only used
    /// by the assertion variant.
    pub negated: BTreeSet<(TriggerType, String)>,
}

impl FewShotExample {
    /// The answer the model should give for this example.
    pub fn answer(&self, assertion_variant: bool) -> Value {
        let mut object = serde_json::Map::new();
        for kind in TriggerType::ALL {
            let items: Vec<Value> = self
                .gold
                .get(kind)
                .iter()
                .map(|p| {
                    if assertion_variant {
                        let assertion = if self.negated.contains(&(kind, p.clone())) {
                            Assertion::Negated
                        } else {
                            Assertion::Affirmed
                        };
                        serde_json::json!({ "phrase": p, "assertion": assertion })
                    } else {
                        Value::String(p.clone())
                    }
                })
                .collect();
            object.insert(kind.key().to_owned(), Value::Array(items));
        }
        Value::Object(object)
    }
}

const NEGATION_CUES: &[&str] = &["no", "niega", "sin", "nunca", "negativo", "negó", "ni"];

fn preceded_by_negation(text: &str) -> bool {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .rev()
        .take(3)
        .any(|w| NEGATION_CUES.contains(&w.to_lowercase().as_str()))
}

fn example_from(doc: &Document, corpus: &Corpus, char_budget: usize) -> Option<FewShotExample> {
    let gold = corpus.gold_for(doc.id());
    let (offset, end) = if doc.len() <= char_budget {
        (0, doc.len())
    } else {
        let section = segment_sections(doc.text())
            .into_iter()
            .find(|s| gold.iter().any(|m| s.start <= m.start && m.end <= s.end))?;
        (section.start, section.end)
    };
    let text = doc.slice(offset, end)?.to_owned();
    let mut phrases = PhraseSet::default();
    let mut affirmed = BTreeSet::new();
    let mut negated = BTreeSet::new();
    for m in gold.iter().filter(|m| offset <= m.start && m.end <= end) {
        let list = phrases.get_mut(m.kind);
        if !list.contains(&m.surface) {
            list.push(m.surface.clone());
        }
        let before = doc.slice(offset, m.start).unwrap_or_default();
        let key = (m.kind, m.surface.clone());
        if preceded_by_negation(before) {
            negated.insert(key);
        } else {
            affirmed.insert(key);
        }
    }
    Some(FewShotExample {
        doc_id: doc.id().to_owned(),
        text,
        gold: phrases,
        negated: negated.difference(&affirmed).cloned().collect(),
    })
}

/// Samples `k` demonstrations from annotated training documents.
///
/// Only documents with at least one gold mention are eligible. Documents up
/// to `char_budget` chars are used whole; longer ones contribute their first
/// section that fully contains a gold mention. Sampling is deterministic in
/// `seed`.
pub fn sample_examples(train: &Corpus, k: usize, seed: u64, char_budget: usize) -> Result<Vec<FewShotExample>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if !train.has_gold() {
        return Err(Error::Corpus(
            "few-shot sampling needs an annotated training corpus".into(),
        ));
    }
    let mut eligible: Vec<FewShotExample> = train
        .documents()
        .iter()
        .filter(|d| !train.gold_for(d.id()).is_empty())
        .filter_map(|d| example_from(d, train, char_budget))
        .collect();
    if k > eligible.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {k} examples from {} eligible training documents",
            eligible.len()
        )));
    }
    eligible.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    eligible.truncate(k);
    for ex in &eligible {
        for kind in TriggerType::ALL {
            if let Some(p) = ex.gold.get(kind).iter().find(|p| !ex.text.contains(p.as_str())) {
                return Err(Error::Corpus(format!(
                    "example {}: phrase `{p}` not in its text",
                    ex.doc_id
                )));
            }
        }
    }
    Ok(eligible)
}

/// Result of one section request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionOutcome {
    pub section: Section,
    pub phrases: PhraseSet,
    pub prompt_hash: String,
    /// Set when the request or the response parsing failed; `phrases` is
    /// then empty.
    pub failure: Option<String>,
}

/// Sends one request per section of `doc` and parses the answers, in
/// section order. Failures are recorded per section and do not abort the
/// document.
pub fn llm_extract_document(
    doc: &Document,
    cfg: &LlmRequestConfig,
    template: &PromptTemplate,
    examples: &[FewShotExample],
    client: &dyn CompletionClient,
) -> Result<Vec<SectionOutcome>> {
    let schema = response_schema(template.assertion_variant);
    segment_sections(doc.text())
        .into_iter()
        .map(|section| {
            let request = ChatRequest {
                model: cfg.model.clone(),
                messages: render_prompt(template, examples, &section.text)?,
                temperature: cfg.temperature,
                top_p: cfg.top_p,
                max_tokens: cfg.max_tokens,
                response_schema: schema.clone(),
            };
            let prompt_hash = request.prompt_hash();
            let result = client
                .complete(&request)
                .map_err(Error::from)
                .and_then(|raw| parse_response(&raw, template.assertion_variant));
            Ok(match result {
                Ok(phrases) => SectionOutcome {
                    section,
                    phrases,
                    prompt_hash,
                    failure: None,
                },
                Err(e) => {
                    log::warn!("{}: section {}-{}: {e}", doc.id(), section.start, section.end);
                    SectionOutcome {
                        section,
                        phrases: PhraseSet::default(),
                        prompt_hash,
                        failure: Some(e.to_string()),
                    }
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn parses_four_lists() {
        let raw = r#"{"tobacco":["fumador"],"alcohol":[],"cannabis":["hachís"],"drug":["cocaína"]}"#;
        let p = parse_response(raw, false).unwrap();
        assert_eq!(p.tobacco, vec!["fumador"]);
        assert!(p.alcohol.is_empty());
        assert_eq!(p.cannabis, vec!["hachís"]);
        assert_eq!(p.drug, vec!["cocaína"]);
    }

    #[test]
    fn missing_list_is_an_error_carrying_payload() {
        let raw = r#"{"tobacco":[],"alcohol":[],"drug":[]}"#;
        match parse_response(raw, false) {
            Err(Error::Response { payload, message }) => {
                assert_eq!(payload, raw);
                assert!(message.contains("cannabis"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_response("not json", false).is_err());
        assert!(parse_response("[]", false).is_err());
        assert!(parse_response(r#"{"tobacco":[1],"alcohol":[],"cannabis":[],"drug":[]}"#, false).is_err());
    }

    #[test]
    fn trims_and_drops_blank_phrases() {
        let raw = r#"{"tobacco":["  fumaba mucho ", "   "],"alcohol":[],"cannabis":[],"drug":[]}"#;
        assert_eq!(parse_response(raw, false).unwrap().tobacco, vec!["fumaba mucho"]);
    }

    #[test]
    fn assertion_variant_keeps_negated_phrases() {
        let raw = r#"```json
{"tobacco":[{"phrase":"No fumador","assertion":"negated"}],"alcohol":[{"phrase":"alcohol","assertion":"affirmed"}],"cannabis":[],"drug":[]}
```"#;
        let p = parse_response(raw, true).unwrap();
        assert_eq!(p.tobacco, vec!["No fumador"]);
        assert_eq!(p.alcohol, vec!["alcohol"]);
        let bad = r#"{"tobacco":[{"phrase":"fumador","assertion":"maybe"}],"alcohol":[],"cannabis":[],"drug":[]}"#;
        assert!(parse_response(bad, true).is_err());
        assert!(parse_response(r#"{"tobacco":["fumador"],"alcohol":[],"cannabis":[],"drug":[]}"#, true).is_err());
    }

    fn train() -> Corpus {
        let texts = [
            ("a", "Fumador de 20 cigarrillos.", vec![(0, 7, TriggerType::Tobacco)]),
            (
                "b",
                "Bebedor ocasional. No fumador.",
                vec![(0, 7, TriggerType::Alcohol), (22, 29, TriggerType::Tobacco)],
            ),
            (
                "c",
                "Consumo de cocaína.\n\nSin otros.",
                vec![(11, 18, TriggerType::Drug)],
            ),
            ("d", "Sin hábitos tóxicos.", vec![]),
        ];
        let mut docs = Vec::new();
        let mut gold = BTreeMap::new();
        for (id, text, spans) in texts {
            let doc = Document::new(id, text).unwrap();
            let ms = spans
                .into_iter()
                .map(|(s, e, k)| crate::Mention::from_document(&doc, k, s, e).unwrap())
                .collect();
            gold.insert(id.to_owned(), ms);
            docs.push(doc);
        }
        Corpus::new(docs, Some(gold)).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_checked() {
        let t = train();
        let a = sample_examples(&t, 2, 42, 1000).unwrap();
        assert_eq!(a, sample_examples(&t, 2, 42, 1000).unwrap());
        assert_eq!(a.len(), 2);
        assert!(sample_examples(&t, 0, 42, 1000).unwrap().is_empty());
        // "d" has no mentions, so only three documents are eligible
        assert!(sample_examples(&t, 4, 42, 1000).is_err());
        let all = sample_examples(&t, 3, 1, 1000).unwrap();
        let b = all.iter().find(|e| e.doc_id == "b").unwrap();
        assert!(b.negated.contains(&(TriggerType::Tobacco, "fumador".into())));
        assert!(!b.negated.contains(&(TriggerType::Alcohol, "Bebedor".into())));
    }

    #[test]
    fn long_documents_fall_back_to_a_section() {
        let t = train();
        let all = sample_examples(&t, 3, 1, 20).unwrap();
        let c = all.iter().find(|e| e.doc_id == "c").unwrap();
        assert_eq!(c.text, "Consumo de cocaína.");
        assert_eq!(c.gold.drug, vec!["cocaína"]);
    }
}
