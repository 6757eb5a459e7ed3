//! Test-only helpers: a brute-force scorer kept independent of `toxtrig::eval`,
//! random instance generators, and fixture paths.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use rand::Rng;
use toxtrig::{CandidateSpan, Mention, Source, TriggerType};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn toy() -> PathBuf {
    fixtures().join("toy")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// All-pairs greedy one-to-one matching on identical (doc, start, end, type).
pub fn oracle_strict(gold: &[Mention], pred: &[Mention], kind: Option<TriggerType>) -> OracleCounts {
    let wanted = |m: &Mention| kind.is_none_or(|k| m.kind == k);
    let gold: Vec<&Mention> = gold.iter().filter(|m| wanted(m)).collect();
    let pred: Vec<&Mention> = pred.iter().filter(|m| wanted(m)).collect();
    let mut used = vec![false; gold.len()];
    let mut tp = 0;
    for p in &pred {
        for (i, g) in gold.iter().enumerate() {
            if !used[i] && g.doc_id == p.doc_id && g.start == p.start && g.end == p.end && g.kind == p.kind {
                used[i] = true;
                tp += 1;
                break;
            }
        }
    }
    OracleCounts {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
    }
}

/// (precision, recall, f1) with the documented empty-denominator conventions.
pub fn oracle_prf(c: OracleCounts) -> (f64, f64, f64) {
    let gold = c.tp + c.fn_;
    let pred = c.tp + c.fp;
    if gold == 0 && pred == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if pred == 0 { 0.0 } else { c.tp as f64 / pred as f64 };
    let r = if gold == 0 { 0.0 } else { c.tp as f64 / gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// (gold contained, gold contained with type, gold total)
pub fn oracle_containment(gold: &[Mention], pred: &[Mention]) -> (usize, usize, usize) {
    let mut gc = 0;
    let mut gct = 0;
    for g in gold {
        let covering: Vec<&Mention> = pred
            .iter()
            .filter(|p| p.doc_id == g.doc_id && p.start <= g.start && g.end <= p.end)
            .collect();
        if !covering.is_empty() {
            gc += 1;
        }
        if covering.iter().any(|p| p.kind == g.kind) {
            gct += 1;
        }
    }
    (gc, gct, gold.len())
}

/// (|intersection|, |union|) of explicit (doc, char index) sets.
pub fn oracle_chars(gold: &[Mention], pred: &[Mention]) -> (usize, usize) {
    let cover = |ms: &[Mention]| -> HashSet<(String, usize)> {
        ms.iter()
            .flat_map(|m| (m.start..m.end).map(move |i| (m.doc_id.clone(), i)))
            .collect()
    };
    let (g, p) = (cover(gold), cover(pred));
    (g.intersection(&p).count(), g.union(&p).count())
}

pub fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// The machine-readable report, computed entirely by the oracle.
pub fn oracle_report_tsv(gold: &[Mention], pred: &[Mention]) -> String {
    let mut out = String::new();
    let mut rows: Vec<(String, OracleCounts)> = TriggerType::ALL
        .iter()
        .map(|&t| (t.as_str().to_owned(), oracle_strict(gold, pred, Some(t))))
        .collect();
    rows.push(("MICRO".into(), oracle_strict(gold, pred, None)));
    for (label, c) in rows {
        let (p, r, f) = oracle_prf(c);
        out += &format!("tp\t{label}\t{}\nfp\t{label}\t{}\nfn\t{label}\t{}\n", c.tp, c.fp, c.fn_);
        out += &format!("precision\t{label}\t{p}\nrecall\t{label}\t{r}\nf1\t{label}\t{f}\n");
    }
    let (gc, gct, n) = oracle_containment(gold, pred);
    let (inter, union) = oracle_chars(gold, pred);
    out += &format!("gc\tALL\t{}\n", ratio_or_one(gc, n));
    out += &format!("gct\tALL\t{}\n", ratio_or_one(gct, n));
    out += &format!("char_iou\tALL\t{}\n", ratio_or_one(inter, union));
    out
}

pub fn random_kind<R: Rng>(rng: &mut R) -> TriggerType {
    TriggerType::ALL[rng.gen_range(0..4)]
}

fn mention(doc: &str, start: usize, end: usize, kind: TriggerType) -> Mention {
    Mention {
        doc_id: doc.to_owned(),
        start,
        end,
        kind,
        surface: "x".repeat(end - start),
    }
}

/// A random (gold, pred) instance: up to 5 documents, up to 20 mentions per
/// document and side, texts up to 500 chars. Predictions mix exact copies,
/// shifted boundaries, type swaps and random spans.
pub fn random_instance<R: Rng>(rng: &mut R) -> (Vec<Mention>, Vec<Mention>) {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for d in 0..rng.gen_range(0..=5) {
        let doc = format!("doc{d}");
        let len = rng.gen_range(2..=500);
        let span = |rng: &mut R| {
            let s = rng.gen_range(0..len - 1);
            let e = rng.gen_range(s + 1..=len.min(s + 40));
            (s, e)
        };
        let n_gold = rng.gen_range(0..=20);
        let doc_gold: Vec<Mention> = (0..n_gold)
            .map(|_| {
                let (s, e) = span(rng);
                mention(&doc, s, e, random_kind(rng))
            })
            .collect();
        let n_pred = rng.gen_range(0..=20);
        for _ in 0..n_pred {
            let m = match (rng.gen_range(0..4), doc_gold.is_empty()) {
                (0, false) => doc_gold[rng.gen_range(0..doc_gold.len())].clone(),
                (1, false) => {
                    let g = &doc_gold[rng.gen_range(0..doc_gold.len())];
                    let s = g.start.saturating_sub(rng.gen_range(0..3));
                    let e = (g.end + rng.gen_range(0..3)).min(len);
                    mention(&doc, s, e, g.kind)
                }
                (2, false) => {
                    let g = &doc_gold[rng.gen_range(0..doc_gold.len())];
                    mention(&doc, g.start, g.end, random_kind(rng))
                }
                _ => {
                    let (s, e) = span(rng);
                    mention(&doc, s, e, random_kind(rng))
                }
            };
            pred.push(m);
        }
        gold.extend(doc_gold);
    }
    (gold, pred)
}

/// Up to 30 random candidates over a 60-char document, with frequent
/// duplicates and nested spans.
pub fn random_candidates<R: Rng>(rng: &mut R) -> Vec<CandidateSpan> {
    let mut out: Vec<CandidateSpan> = Vec::new();
    for _ in 0..rng.gen_range(0..=30) {
        if !out.is_empty() && rng.gen_bool(0.15) {
            out.push(out[rng.gen_range(0..out.len())]);
            continue;
        }
        let s = rng.gen_range(0..59);
        let e = rng.gen_range(s + 1..=60.min(s + 15));
        out.push(CandidateSpan {
            start: s,
            end: e,
            kind: random_kind(rng),
            source: if rng.gen_bool(0.5) { Source::Llm } else { Source::Dict },
        });
    }
    out
}
