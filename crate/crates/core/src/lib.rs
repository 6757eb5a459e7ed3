//! Toxic-habit trigger extraction for Spanish clinical case reports.
//!
//! The crate covers the full pipeline around trigger mentions (tobacco,
//! alcohol, cannabis and drug use):
//!
//! - [`corpus`]: standoff `.txt`/`.ann` corpora, deterministic splits, statistics
//! - [`segment`]: blank-line sectioning and a rule-based sentence counter
//! - [`dictionary`]: the surface-form dictionary baseline
//! - [`llm`]: zero/few-shot prompting over a chat-completions endpoint, with
//!   record/replay backends for offline runs
//! - [`align`]: phrase-to-span alignment and shorter-span overlap resolution
//! - [`combine`]: hybrid dictionary + LLM predictions
//! - [`eval`]: strict P/R/F1, containment metrics (GC/GCT) and character IoU
//! - [`pipeline`] and [`cli`]: reproducible batch runs with a run manifest
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod align;
pub mod cli;
pub mod combine;
pub mod corpus;
pub mod dictionary;
mod error;
pub mod eval;
pub mod llm;
pub mod pipeline;
pub mod segment;
pub mod text;

pub use crate::align::{CandidateSpan, Source};
pub use crate::corpus::{Corpus, CorpusStats, Document, Mention, TriggerType};
pub use crate::error::{Error, Result};
pub use crate::text::NormalizationPolicy;
