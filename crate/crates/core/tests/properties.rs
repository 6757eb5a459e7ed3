mod common;

use proptest::prelude::*;
use proptest::sample::subsequence;
use toxtrig::align::{find_occurrences, resolve_overlaps, select_shortest, Span};
use toxtrig::combine::{combine, CombinePolicy};
use toxtrig::corpus::{parse_standoff, write_standoff};
use toxtrig::dictionary::{dict_extract, Dictionary};
use toxtrig::eval::{self, EvalReport};
use toxtrig::llm::{parse_response, PhraseSet};
use toxtrig::segment::segment_sections;
use toxtrig::{CandidateSpan, Document, Mention, NormalizationPolicy, Source, TriggerType};

fn kind() -> impl Strategy<Value = TriggerType> {
    prop::sample::select(TriggerType::ALL.to_vec())
}

fn text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!['a', 'b', 'é', 'ñ', 'Á', ' ', '.', '\n', 'x']),
        1..max,
    )
    .prop_map(|cs| cs.into_iter().collect())
}

fn doc_with_mentions() -> impl Strategy<Value = (Document, Vec<Mention>)> {
    text(120)
        .prop_flat_map(|t| {
            let doc = Document::new("d", t).unwrap();
            let n = doc.len();
            let spans = prop::collection::vec((0..n, 1..=12usize, kind()), 0..10);
            (Just(doc), spans)
        })
        .prop_map(|(doc, spans)| {
            let mut ms: Vec<Mention> = spans
                .into_iter()
                .filter_map(|(s, l, k)| Mention::from_document(&doc, k, s, (s + l).min(doc.len())).ok())
                .filter(|m| !m.surface.contains('\n'))
                .collect();
            ms.sort();
            (doc, ms)
        })
}

fn candidates() -> impl Strategy<Value = Vec<CandidateSpan>> {
    prop::collection::vec(
        (0..40usize, 1..10usize, kind(), any::<bool>()).prop_map(|(s, l, k, d)| CandidateSpan {
            start: s,
            end: s + l,
            kind: k,
            source: if d { Source::Dict } else { Source::Llm },
        }),
        0..25,
    )
}

fn phrase() -> impl Strategy<Value = String> {
    "[a-zñé][a-zñé ]{0,12}[a-zñé]".prop_map(|s| s.to_string())
}

fn phrase_set() -> impl Strategy<Value = PhraseSet> {
    let list = || prop::collection::vec(phrase(), 0..4);
    (list(), list(), list(), list()).prop_map(|(tobacco, alcohol, cannabis, drug)| PhraseSet {
        tobacco,
        alcohol,
        cannabis,
        drug,
    })
}

proptest! {
    #[test]
    fn standoff_round_trip((doc, ms) in doc_with_mentions()) {
        let ann = write_standoff(&ms).unwrap();
        prop_assert_eq!(parse_standoff(&ann, &doc).unwrap(), ms);
    }

    #[test]
    fn resolution_properties(spans in candidates(), seed in any::<u64>()) {
        let kept = select_shortest(&spans);
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(!a.overlaps_span(b));
            }
        }
        prop_assert_eq!(select_shortest(&kept), kept.clone());
        for s in &spans {
            let survived = kept.iter().any(|k| (k.start, k.end, k.kind) == (s.start, s.end, s.kind));
            prop_assert!(survived || kept.iter().any(|k| k.overlaps_span(s) && k.span_len() <= s.span_len()));
        }
        let mut shuffled = spans.clone();
        let n = shuffled.len();
        if n > 1 {
            for i in 0..n {
                shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
            }
        }
        let key = |v: &[CandidateSpan]| v.iter().map(|c| (c.start, c.end, c.kind)).collect::<Vec<_>>();
        prop_assert_eq!(key(&select_shortest(&shuffled)), key(&kept));
    }

    #[test]
    fn resolved_mentions_match_document(spans in candidates()) {
        let doc = Document::new("d", "x".repeat(50)).unwrap();
        for m in resolve_overlaps(&doc, &spans).unwrap() {
            prop_assert_eq!(doc.slice(m.start, m.end), Some(m.surface.as_str()));
        }
    }

    #[test]
    fn combine_keeps_or_covers_inputs(a in candidates(), b in candidates(), p in 0..3usize) {
        let doc = Document::new("d", "x".repeat(50)).unwrap();
        let a = resolve_overlaps(&doc, &a).unwrap();
        let b = resolve_overlaps(&doc, &b).unwrap();
        let policy = CombinePolicy::ALL[p];
        let out = combine(&a, &b, policy).unwrap();
        for (i, x) in out.iter().enumerate() {
            for y in &out[i + 1..] {
                prop_assert!(!x.overlaps(y));
            }
        }
        for m in a.iter().chain(&b) {
            prop_assert!(out.contains(m) || out.iter().any(|o| o.overlaps(m)));
        }
        prop_assert_eq!(combine(&a, &[], policy).unwrap(), a);
    }

    #[test]
    fn sections_reconstruct_text(t in text(200)) {
        let sections = segment_sections(&t);
        let chars: Vec<char> = t.chars().collect();
        let mut rebuilt = String::new();
        let mut pos = 0;
        for s in &sections {
            prop_assert!(s.start >= pos && s.start < s.end);
            let gap: String = chars[pos..s.start].iter().collect();
            prop_assert!(gap.trim().is_empty());
            let slice: String = chars[s.start..s.end].iter().collect();
            prop_assert_eq!(&slice, &s.text);
            prop_assert!(!s.text.contains("\n\n"));
            prop_assert_eq!(s.text.trim(), s.text.as_str());
            rebuilt.push_str(&gap);
            rebuilt.push_str(&s.text);
            pos = s.end;
        }
        let tail: String = chars[pos..].iter().collect();
        prop_assert!(tail.trim().is_empty());
        rebuilt.push_str(&tail);
        prop_assert_eq!(rebuilt, t);
    }

    #[test]
    fn response_parse_inverts_serialize(set in phrase_set()) {
        let raw = serde_json::to_string(&set).unwrap();
        prop_assert_eq!(parse_response(&raw, false).unwrap(), set);
    }

    #[test]
    fn occurrences_are_disjoint_matches(t in text(80), needle in "[abéñ]{1,3}", fold in any::<bool>(), wb in any::<bool>()) {
        let policy = NormalizationPolicy { case_fold: fold, require_word_boundary: wb };
        let hits = find_occurrences(&t, &needle, policy);
        let doc = Document::new("d", t.clone()).unwrap();
        let mut last_end = 0;
        for (s, e) in hits {
            prop_assert!(s >= last_end);
            prop_assert_eq!(policy.normalize(doc.slice(s, e).unwrap()), policy.normalize(&needle));
            last_end = e;
        }
    }

    #[test]
    fn dictionary_output_is_consistent(
        t in text(150),
        entries in prop::collection::vec(("[abéñx]{1,4}", kind()), 0..6),
        fold in any::<bool>(),
    ) {
        let policy = NormalizationPolicy { case_fold: fold, require_word_boundary: true };
        let mut seen = std::collections::BTreeMap::new();
        for (s, k) in &entries {
            seen.entry(policy.normalize(s)).or_insert(*k);
        }
        let dict = Dictionary::from_entries(seen.clone(), policy).unwrap();
        let doc = Document::new("d", t).unwrap();
        let out = dict_extract(&doc, &dict);
        prop_assert_eq!(&out, &dict_extract(&doc, &dict));
        for (i, m) in out.iter().enumerate() {
            prop_assert_eq!(seen.get(&policy.normalize(&m.surface)), Some(&m.kind));
            for other in &out[i + 1..] {
                prop_assert!(!m.overlaps(other));
            }
        }
        prop_assert!(out.windows(2).all(|w| (w[0].start, w[0].end) < (w[1].start, w[1].end)));
    }

    #[test]
    fn metric_invariants(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (gold, pred) = common::random_instance(&mut rng);
        let r = EvalReport::from_mentions(&gold, &pred);
        prop_assert!(r.gct <= r.gc);
        prop_assert!(r.micro.recall <= r.gct);
        for s in r.per_type.values().chain(std::iter::once(&r.micro)) {
            prop_assert!((s.f1 - eval::f1(s.precision, s.recall)).abs() <= 1e-12);
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let mut g2 = gold.clone();
        let mut p2 = pred.clone();
        g2.reverse();
        p2.sort();
        prop_assert_eq!(EvalReport::from_mentions(&g2, &p2), r);
    }

    #[test]
    fn subsets_of_gold_have_full_precision(seed in any::<u64>(), keep in subsequence((0..20usize).collect::<Vec<_>>(), 0..20)) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (gold, _) = common::random_instance(&mut rng);
        let pred: Vec<Mention> = keep.iter().filter_map(|&i| gold.get(i).cloned()).collect();
        let c = eval::strict_counts(&gold, &pred).micro;
        prop_assert_eq!(c.fp, 0);
        prop_assert_eq!(c.tp, pred.len());
    }
}
