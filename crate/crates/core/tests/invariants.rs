use std::collections::BTreeMap;

use proptest::prelude::*;

use radevent::eval::{evaluate, score_sentence, Level};
use radevent::event::{AnatomyEntity, Annotations, Event, SentenceKey, Span};
use radevent::ontology::{default_term_list, AnatomyLabel, Ontology, TriggerType};
use radevent::par::Parallelism;
use radevent::retrieval::{filter_corpus, normalize_query, RetrievalConfig, SearchIndex};
use radevent::textio::{emit_blocks, emit_vanilla, parse_blocks_text, parse_vanilla_text, StepKind};

fn labels() -> Vec<AnatomyLabel> {
    Ontology::builtin().labels()
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["left", "lobe", "liver", "mass", "T12", "3.1", "node", "of", "wall", "(r)"]),
        1..4,
    )
    .prop_map(|w| w.join(" "))
}

fn kind() -> impl Strategy<Value = TriggerType> {
    prop::sample::select(TriggerType::ALL.to_vec())
}

fn events() -> impl Strategy<Value = Vec<Event>> {
    let anatomy = (text(), prop::sample::select(labels())).prop_map(|(text, label)| AnatomyEntity {
        text,
        span: None,
        label: Some(label),
    });
    let event = (text(), kind(), prop::collection::vec(anatomy, 0..4)).prop_map(|(t, k, anatomies)| {
        let mut e = Event::new(t, k);
        e.anatomies = anatomies;
        e
    });
    prop::collection::vec(event, 0..4)
}

/// Events with random spans over a 30-character sentence.
fn spanned_events() -> impl Strategy<Value = Vec<Event>> {
    let span = (0usize..25, 1usize..6).prop_map(|(s, l)| Some(Span::new(s, s + l)));
    let anatomy = (span.clone(), prop::sample::select(labels()[..8].to_vec()))
        .prop_map(|(span, label)| AnatomyEntity { text: "a".into(), span, label: Some(label) });
    let event = (span, kind(), prop::collection::vec(anatomy, 0..3)).prop_map(|(span, k, anatomies)| {
        let mut e = Event::new("t", k);
        e.trigger.span = span;
        e.anatomies = anatomies;
        e
    });
    prop::collection::vec(event, 0..4)
}

fn annotations() -> impl Strategy<Value = Annotations> {
    prop::collection::vec(spanned_events(), 1..6).prop_map(|sents| {
        sents
            .into_iter()
            .enumerate()
            .map(|(i, e)| (SentenceKey::new(format!("d{}", i % 2), i), e))
            .collect::<BTreeMap<_, _>>()
    })
}

proptest! {
    #[test]
    fn vanilla_round_trip(evs in events()) {
        let text = emit_vanilla(StepKind::OneStepVanilla, &evs);
        let back = parse_vanilla_text(StepKind::OneStepVanilla, &text, Ontology::builtin());
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.value.into_events(), evs);
    }

    #[test]
    fn blocks_round_trip(evs in events()) {
        let back = parse_blocks_text(&emit_blocks(&evs), Ontology::builtin());
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.value, evs);
    }

    #[test]
    fn self_comparison_is_perfect(evs in spanned_events()) {
        let c = score_sentence(&evs, &evs);
        for level in Level::ALL {
            let c = c.get(level);
            prop_assert_eq!((c.fp, c.fn_), (0, 0));
        }
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall(g in spanned_events(), p in spanned_events()) {
        let ab = score_sentence(&g, &p);
        let ba = score_sentence(&p, &g);
        for level in Level::ALL {
            let (x, y) = (ab.get(level), ba.get(level));
            prop_assert_eq!((x.tp, x.fp, x.fn_), (y.tp, y.fn_, y.fp));
        }
        prop_assert!(ab.anatomy_child.tp <= ab.anatomy_parent.tp);
    }

    #[test]
    fn evaluation_is_parallelism_independent(g in annotations(), p in annotations()) {
        let seq = evaluate(&g, &p, Parallelism::Sequential);
        let par = evaluate(&g, &p, Parallelism::Parallel { threads: Some(3) });
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn bm25_scores_ignore_pool_order(
        pool in prop::collection::vec(text(), 2..12),
        rotate in 0usize..12,
        query in text(),
    ) {
        let mut shuffled = pool.clone();
        let r = rotate % pool.len();
        shuffled.rotate_left(r);
        let a = SearchIndex::build(pool.clone(), RetrievalConfig::default());
        let b = SearchIndex::build(shuffled, RetrievalConfig::default());
        let q = normalize_query(&query);
        for i in 0..pool.len() {
            let j = (i + pool.len() - r) % pool.len();
            let (x, y) = (a.score(&q, i).unwrap(), b.score(&q, j).unwrap());
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!(x >= 0.0);
        }
    }

    #[test]
    fn filter_keeps_an_ordered_subset(
        sentences in prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["the", "liver", "Spine", "is", "normal", "lungs", "x"]), 0..6)
                .prop_map(|w| w.join(" ")),
            0..20,
        ),
    ) {
        let terms = default_term_list();
        let kept = filter_corpus(&sentences, &terms, 3, Parallelism::Sequential);
        let mut rest = sentences.iter();
        for k in &kept {
            prop_assert!(rest.any(|s| s == k), "not an ordered subset");
            prop_assert!(normalize_query(k).len() >= 3);
        }
        let par = filter_corpus(&sentences, &terms, 3, Parallelism::default());
        prop_assert_eq!(kept, par);
    }
}
