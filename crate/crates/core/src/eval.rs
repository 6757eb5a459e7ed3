//! Span-level scoring: strict P/R/F1, gold-containment ratios and
//! character-level IoU.
//!
//! Conventions for empty denominators: precision is 0 when nothing was
//! predicted but gold exists, recall is 0 when gold is empty but something
//! was predicted, and all three are 1 when both sides are empty. GC and GCT
//! are 1 with no gold; IoU is 1 when neither side covers any character.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::corpus::{Corpus, Mention, TriggerType};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        match (self.tp + self.fp, self.fn_) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (n, _) => self.tp as f64 / n as f64,
        }
    }

    pub fn recall(&self) -> f64 {
        match (self.tp + self.fn_, self.fp) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (n, _) => self.tp as f64 / n as f64,
        }
    }

    pub fn scores(&self) -> Prf {
        let (p, r) = (self.precision(), self.recall());
        Prf {
            counts: *self,
            precision: p,
            recall: r,
            f1: f1(p, r),
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrictCounts {
    pub per_type: BTreeMap<TriggerType, Counts>,
    pub micro: Counts,
}

type SpanKey<'a> = (&'a str, usize, usize, TriggerType);

fn key(m: &Mention) -> SpanKey<'_> {
    (m.doc_id.as_str(), m.start, m.end, m.kind)
}

/// One-to-one exact matching on `(doc, start, end, type)`.
pub fn strict_counts(gold: &[Mention], pred: &[Mention]) -> StrictCounts {
    let mut gold_left: HashMap<SpanKey<'_>, usize> = HashMap::new();
    for g in gold {
        *gold_left.entry(key(g)).or_default() += 1;
    }
    let mut per_type: BTreeMap<TriggerType, Counts> =
        TriggerType::ALL.into_iter().map(|t| (t, Counts::default())).collect();
    for p in pred {
        let counts = per_type.get_mut(&p.kind).expect("all types present");
        match gold_left.get_mut(&key(p)) {
            Some(n) if *n > 0 => {
                *n -= 1;
                counts.tp += 1;
            }
            _ => counts.fp += 1,
        }
    }
    for ((_, _, _, kind), left) in gold_left {
        per_type.get_mut(&kind).expect("all types present").fn_ += left;
    }
    let mut micro = Counts::default();
    for c in per_type.values() {
        micro += *c;
    }
    StrictCounts { per_type, micro }
}

/// Integer numerators behind GC and GCT, plus the gold count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub contained: usize,
    pub contained_typed: usize,
    pub gold: usize,
}

impl Containment {
    pub fn gc(&self) -> f64 {
        ratio_or_one(self.contained, self.gold)
    }

    pub fn gct(&self) -> f64 {
        ratio_or_one(self.contained_typed, self.gold)
    }
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Predicted intervals of one group sorted by start, with running max end.
struct ContainIndex {
    starts: Vec<usize>,
    max_end: Vec<usize>,
}

impl ContainIndex {
    fn new(mut spans: Vec<(usize, usize)>) -> Self {
        spans.sort_unstable();
        let mut best = 0;
        let max_end = spans
            .iter()
            .map(|&(_, e)| {
                best = best.max(e);
                best
            })
            .collect();
        Self {
            starts: spans.into_iter().map(|(s, _)| s).collect(),
            max_end,
        }
    }

    /// Whether some interval has `start <= g_start` and `end >= g_end`.
    fn contains(&self, g_start: usize, g_end: usize) -> bool {
        let n = self.starts.partition_point(|&s| s <= g_start);
        n > 0 && self.max_end[n - 1] >= g_end
    }
}

/// Counts gold mentions fully covered by some prediction in the same
/// document (GC), and by one of the same type (GCT).
pub fn containment(gold: &[Mention], pred: &[Mention]) -> Containment {
    let mut by_doc: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    let mut by_doc_type: HashMap<(&str, TriggerType), Vec<(usize, usize)>> = HashMap::new();
    for p in pred {
        by_doc.entry(&p.doc_id).or_default().push((p.start, p.end));
        by_doc_type
            .entry((&p.doc_id, p.kind))
            .or_default()
            .push((p.start, p.end));
    }
    let by_doc: HashMap<_, _> = by_doc.into_iter().map(|(k, v)| (k, ContainIndex::new(v))).collect();
    let by_doc_type: HashMap<_, _> = by_doc_type
        .into_iter()
        .map(|(k, v)| (k, ContainIndex::new(v)))
        .collect();
    let mut out = Containment {
        gold: gold.len(),
        ..Default::default()
    };
    for g in gold {
        if by_doc
            .get(g.doc_id.as_str())
            .is_some_and(|ix| ix.contains(g.start, g.end))
        {
            out.contained += 1;
        }
        if by_doc_type
            .get(&(g.doc_id.as_str(), g.kind))
            .is_some_and(|ix| ix.contains(g.start, g.end))
        {
            out.contained_typed += 1;
        }
    }
    out
}

pub fn gc_gct(gold: &[Mention], pred: &[Mention]) -> (f64, f64) {
    let c = containment(gold, pred);
    (c.gc(), c.gct())
}

/// Covered-character totals summed over documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CharOverlap {
    pub intersection: usize,
    pub union: usize,
}

impl CharOverlap {
    pub fn iou(&self) -> f64 {
        ratio_or_one(self.intersection, self.union)
    }
}

fn merged(mut spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    spans.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn covered(spans: &[(usize, usize)]) -> usize {
    spans.iter().map(|(s, e)| e - s).sum()
}

fn intersection(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            total += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Character coverage of gold vs predictions, ignoring types. Overlapping
/// spans on one side are unioned first.
pub fn char_overlap(gold: &[Mention], pred: &[Mention]) -> CharOverlap {
    type Intervals = Vec<(usize, usize)>;
    let mut docs: BTreeMap<&str, (Intervals, Intervals)> = BTreeMap::new();
    for g in gold {
        docs.entry(&g.doc_id).or_default().0.push((g.start, g.end));
    }
    for p in pred {
        docs.entry(&p.doc_id).or_default().1.push((p.start, p.end));
    }
    let mut out = CharOverlap::default();
    for (g, p) in docs.into_values() {
        let (g, p) = (merged(g), merged(p));
        let inter = intersection(&g, &p);
        out.intersection += inter;
        out.union += covered(&g) + covered(&p) - inter;
    }
    out
}

pub fn char_iou(gold: &[Mention], pred: &[Mention]) -> f64 {
    char_overlap(gold, pred).iou()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_type: BTreeMap<TriggerType, Prf>,
    pub micro: Prf,
    pub containment: Containment,
    pub overlap: CharOverlap,
    pub gc: f64,
    pub gct: f64,
    pub char_iou: f64,
}

impl EvalReport {
    pub fn from_mentions(gold: &[Mention], pred: &[Mention]) -> Self {
        let strict = strict_counts(gold, pred);
        let containment = containment(gold, pred);
        let overlap = char_overlap(gold, pred);
        Self {
            per_type: strict.per_type.iter().map(|(&t, c)| (t, c.scores())).collect(),
            micro: strict.micro.scores(),
            gc: containment.gc(),
            gct: containment.gct(),
            char_iou: overlap.iou(),
            containment,
            overlap,
        }
    }

    /// One `metric<TAB>type<TAB>value` line per metric.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let rows = self
            .per_type
            .iter()
            .map(|(t, s)| (t.as_str(), s))
            .chain(std::iter::once(("MICRO", &self.micro)));
        for (label, s) in rows {
            let _ = writeln!(out, "tp\t{label}\t{}", s.counts.tp);
            let _ = writeln!(out, "fp\t{label}\t{}", s.counts.fp);
            let _ = writeln!(out, "fn\t{label}\t{}", s.counts.fn_);
            let _ = writeln!(out, "precision\t{label}\t{}", s.precision);
            let _ = writeln!(out, "recall\t{label}\t{}", s.recall);
            let _ = writeln!(out, "f1\t{label}\t{}", s.f1);
        }
        let _ = writeln!(out, "gc\tALL\t{}", self.gc);
        let _ = writeln!(out, "gct\tALL\t{}", self.gct);
        let _ = writeln!(out, "char_iou\tALL\t{}", self.char_iou);
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}",
            "Type", "Precision", "Recall", "F1", "TP", "FP", "FN"
        )?;
        let rows = self
            .per_type
            .iter()
            .map(|(t, s)| (t.as_str(), s))
            .chain(std::iter::once(("MICRO", &self.micro)));
        for (label, s) in rows {
            writeln!(
                f,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6}",
                label, s.precision, s.recall, s.f1, s.counts.tp, s.counts.fp, s.counts.fn_
            )?;
        }
        writeln!(f)?;
        writeln!(f, "{:<10} {:>9.4}", "GC", self.gc)?;
        writeln!(f, "{:<10} {:>9.4}", "GCT", self.gct)?;
        writeln!(f, "{:<10} {:>9.4}", "IoU", self.char_iou)
    }
}

/// Scores predictions against the gold annotations of `gold_corpus`.
/// Documents without predictions count as predicting nothing.
pub fn evaluate(gold_corpus: &Corpus, predictions: &BTreeMap<String, Vec<Mention>>) -> Result<EvalReport> {
    if !gold_corpus.has_gold() {
        return Err(Error::Corpus("evaluation corpus has no gold annotations".into()));
    }
    let mut pred = Vec::new();
    for (doc_id, mentions) in predictions {
        if gold_corpus.document(doc_id).is_none() {
            return Err(Error::Corpus(format!("predictions for unknown document `{doc_id}`")));
        }
        if let Some(m) = mentions.iter().find(|m| &m.doc_id != doc_id) {
            return Err(Error::CrossDocument(doc_id.clone(), m.doc_id.clone()));
        }
        pred.extend(mentions.iter().cloned());
    }
    Ok(EvalReport::from_mentions(&gold_corpus.all_gold(), &pred))
}
