//! Trigger and anatomy F1 at four levels.
//!
//! * trigger: spans overlap and types are equal;
//! * anatomy span: under a matched trigger pair, spans overlap;
//! * anatomy parent / child: under a matched trigger pair, the parent (or
//!   parent and child) category is equal, spans ignored.
//!
//! Every level is a one-to-one matching. Overlap matching processes entities
//! of both sides in order of span end (then start) and pairs each unmatched
//! entity with the compatible unmatched entity of the other side that ends
//! first. Overlap graphs of intervals make this greedy choice maximum.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::event::{AnatomyEntity, Annotations, Event, SentenceKey, Span};
use crate::ontology::{AnatomyLabel, AnatomyParent};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Trigger,
    AnatomySpan,
    AnatomyParent,
    AnatomyChild,
}

impl Level {
    pub const ALL: [Level; 4] = [
        Level::Trigger,
        Level::AnatomySpan,
        Level::AnatomyParent,
        Level::AnatomyChild,
    ];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Trigger => "trigger",
            Level::AnatomySpan => "anatomy_span",
            Level::AnatomyParent => "anatomy_parent",
            Level::AnatomyChild => "anatomy_child",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl Counts {
    pub fn is_zero(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    pub fn prf(&self) -> Prf {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            p,
            r,
            f1,
        }
    }
}

/// Precision, recall and F1; each is 0 when its denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

/// Counts for all four levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelCounts {
    pub trigger: Counts,
    pub anatomy_span: Counts,
    pub anatomy_parent: Counts,
    pub anatomy_child: Counts,
}

impl LevelCounts {
    pub fn get(&self, level: Level) -> Counts {
        match level {
            Level::Trigger => self.trigger,
            Level::AnatomySpan => self.anatomy_span,
            Level::AnatomyParent => self.anatomy_parent,
            Level::AnatomyChild => self.anatomy_child,
        }
    }
}

impl AddAssign for LevelCounts {
    fn add_assign(&mut self, o: LevelCounts) {
        self.trigger += o.trigger;
        self.anatomy_span += o.anatomy_span;
        self.anatomy_parent += o.anatomy_parent;
        self.anatomy_child += o.anatomy_child;
    }
}

/// Maximum one-to-one matching between two span sets where an edge needs
/// overlapping spans and equal keys. Entities without a span never match.
/// Returns `(gold index, pred index)` pairs ordered by gold index.
pub fn match_spans<K: Eq>(gold: &[(Option<Span>, K)], pred: &[(Option<Span>, K)]) -> Vec<(usize, usize)> {
    // (end, start, side, index); side 0 = gold, 1 = pred.
    let mut order: Vec<(usize, usize, u8, usize)> = Vec::new();
    for (side, items) in [(0u8, gold), (1u8, pred)] {
        for (i, (span, _)) in items.iter().enumerate() {
            if let Some(s) = span {
                if !s.is_empty() {
                    order.push((s.end, s.start, side, i));
                }
            }
        }
    }
    order.sort_unstable();
    let mut used = [vec![false; gold.len()], vec![false; pred.len()]];
    let mut pairs = Vec::new();
    for &(end, start, side, i) in &order {
        if used[side as usize][i] {
            continue;
        }
        let me = Span::new(start, end);
        let (mine, other) = if side == 0 { (gold, pred) } else { (pred, gold) };
        let other_side = 1 - side as usize;
        let partner = order
            .iter()
            .filter(|&&(_, _, s, j)| s as usize == other_side && !used[other_side][j])
            .find(|&&(e, st, _, j)| Span::new(st, e).overlaps(&me) && other[j].1 == mine[i].1);
        if let Some(&(_, _, _, j)) = partner {
            used[side as usize][i] = true;
            used[other_side][j] = true;
            pairs.push(if side == 0 { (i, j) } else { (j, i) });
        }
    }
    pairs.sort_unstable();
    pairs
}

/// One-to-one trigger matching: overlapping spans and equal types.
pub fn match_triggers(gold: &[Event], pred: &[Event]) -> Vec<(usize, usize)> {
    let key = |e: &Event| (e.trigger.span, e.trigger.kind);
    match_spans(
        &gold.iter().map(key).collect::<Vec<_>>(),
        &pred.iter().map(key).collect::<Vec<_>>(),
    )
}

fn anatomy_span_count(gold: &[AnatomyEntity], pred: &[AnatomyEntity]) -> usize {
    let key = |a: &AnatomyEntity| (a.span, ());
    match_spans(
        &gold.iter().map(key).collect::<Vec<_>>(),
        &pred.iter().map(key).collect::<Vec<_>>(),
    )
    .len()
}

fn multiset<'a, K: std::hash::Hash + Eq>(
    items: impl Iterator<Item = &'a AnatomyLabel>,
    key: impl Fn(&'a AnatomyLabel) -> K,
) -> HashMap<K, usize> {
    let mut m = HashMap::new();
    for l in items {
        *m.entry(key(l)).or_default() += 1;
    }
    m
}

fn intersection<K: std::hash::Hash + Eq>(a: &HashMap<K, usize>, b: &HashMap<K, usize>) -> usize {
    a.iter().map(|(k, n)| (*n).min(b.get(k).copied().unwrap_or(0))).sum()
}

/// (parent TP, child TP) under one matched trigger pair. Child-equal pairs
/// are matched first, so every child TP is also a parent TP.
fn category_counts(gold: &[AnatomyEntity], pred: &[AnatomyEntity]) -> (usize, usize) {
    let g = || gold.iter().filter_map(|a| a.label.as_ref());
    let p = || pred.iter().filter_map(|a| a.label.as_ref());
    let parent = |l: &AnatomyLabel| -> AnatomyParent { l.parent() };
    let child = |l: &AnatomyLabel| -> (AnatomyParent, String) { (l.parent(), l.child().to_string()) };
    (
        intersection(&multiset(g(), parent), &multiset(p(), parent)),
        intersection(&multiset(g(), child), &multiset(p(), child)),
    )
}

/// Counts for one sentence.
pub fn score_sentence(gold: &[Event], pred: &[Event]) -> LevelCounts {
    let pairs = match_triggers(gold, pred);
    let n_gold_anat: usize = gold.iter().map(|e| e.anatomies.len()).sum();
    let n_pred_anat: usize = pred.iter().map(|e| e.anatomies.len()).sum();
    let (mut span_tp, mut parent_tp, mut child_tp) = (0, 0, 0);
    for &(g, p) in &pairs {
        span_tp += anatomy_span_count(&gold[g].anatomies, &pred[p].anatomies);
        let (pa, ch) = category_counts(&gold[g].anatomies, &pred[p].anatomies);
        parent_tp += pa;
        child_tp += ch;
    }
    let counts = |tp: usize, n_gold: usize, n_pred: usize| Counts {
        tp,
        fp: n_pred - tp,
        fn_: n_gold - tp,
    };
    LevelCounts {
        trigger: counts(pairs.len(), gold.len(), pred.len()),
        anatomy_span: counts(span_tp, n_gold_anat, n_pred_anat),
        anatomy_parent: counts(parent_tp, n_gold_anat, n_pred_anat),
        anatomy_child: counts(child_tp, n_gold_anat, n_pred_anat),
    }
}

/// Per-sentence counts over the union of annotated sentences; a sentence
/// missing from one side has no events on that side.
pub fn count_all(gold: &Annotations, pred: &Annotations, parallelism: Parallelism) -> Vec<(SentenceKey, LevelCounts)> {
    let keys: Vec<&SentenceKey> = {
        let mut k: Vec<&SentenceKey> = gold.keys().chain(pred.keys()).collect();
        k.sort();
        k.dedup();
        k
    };
    let none: Vec<Event> = Vec::new();
    par::map(&keys, parallelism, |k| {
        let g = gold.get(*k).unwrap_or(&none);
        let p = pred.get(*k).unwrap_or(&none);
        ((*k).clone(), score_sentence(g, p))
    })
}

/// Micro-averaged scores at one level.
pub fn score(gold: &Annotations, pred: &Annotations, level: Level) -> Prf {
    let mut total = Counts::default();
    for (_, c) in count_all(gold, pred, Parallelism::Sequential) {
        total += c.get(level);
    }
    total.prf()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScores {
    pub trigger: Prf,
    pub anatomy_span: Prf,
    pub anatomy_parent: Prf,
    pub anatomy_child: Prf,
}

impl LevelScores {
    pub fn get(&self, level: Level) -> &Prf {
        match level {
            Level::Trigger => &self.trigger,
            Level::AnatomySpan => &self.anatomy_span,
            Level::AnatomyParent => &self.anatomy_parent,
            Level::AnatomyChild => &self.anatomy_child,
        }
    }
}

/// Mean per-document precision, recall and F1. Documents with no gold and no
/// predicted entity at a level are left out of that level's mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MacroScore {
    pub documents: usize,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub trigger: MacroScore,
    pub anatomy_span: MacroScore,
    pub anatomy_parent: MacroScore,
    pub anatomy_child: MacroScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub micro: LevelScores,
    #[serde(rename = "macro_by_document")]
    pub macro_: MacroScores,
    pub sentences: usize,
    pub documents: usize,
    pub config: BTreeMap<String, String>,
}

pub fn evaluate(gold: &Annotations, pred: &Annotations, parallelism: Parallelism) -> EvalReport {
    let per_sentence = count_all(gold, pred, parallelism);
    let mut total = LevelCounts::default();
    let mut by_doc: BTreeMap<&str, LevelCounts> = BTreeMap::new();
    for (key, c) in &per_sentence {
        total += *c;
        *by_doc.entry(key.doc_id.as_str()).or_default() += *c;
    }
    let macro_at = |level: Level| {
        let prfs: Vec<Prf> = by_doc
            .values()
            .map(|c| c.get(level))
            .filter(|c| !c.is_zero())
            .map(|c| c.prf())
            .collect();
        let n = prfs.len();
        let mean = |f: fn(&Prf) -> f64| if n == 0 { 0.0 } else { prfs.iter().map(f).sum::<f64>() / n as f64 };
        MacroScore {
            documents: n,
            p: mean(|x| x.p),
            r: mean(|x| x.r),
            f1: mean(|x| x.f1),
        }
    };
    let config = [
        ("matching", "one_to_one_greedy_by_span_end"),
        ("overlap", "character_half_open"),
        ("averaging", "micro"),
        ("anatomy_scope", "matched_trigger_pairs"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    EvalReport {
        micro: LevelScores {
            trigger: total.trigger.prf(),
            anatomy_span: total.anatomy_span.prf(),
            anatomy_parent: total.anatomy_parent.prf(),
            anatomy_child: total.anatomy_child.prf(),
        },
        macro_: MacroScores {
            trigger: macro_at(Level::Trigger),
            anatomy_span: macro_at(Level::AnatomySpan),
            anatomy_parent: macro_at(Level::AnatomyParent),
            anatomy_child: macro_at(Level::AnatomyChild),
        },
        sentences: per_sentence.len(),
        documents: by_doc.len(),
        config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{Ontology, TriggerType};

    fn trig(s: usize, e: usize, kind: TriggerType) -> Event {
        let mut ev = Event::new("t", kind);
        ev.trigger.span = Some(Span::new(s, e));
        ev
    }

    fn anat(ev: &mut Event, s: usize, e: usize, label: &str) {
        ev.anatomies.push(AnatomyEntity {
            text: "a".into(),
            span: Some(Span::new(s, e)),
            label: Some(Ontology::builtin().parse_label(label).unwrap()),
        });
    }

    #[test]
    fn identical_sides_match_fully() {
        let mut e = trig(0, 3, TriggerType::Lesion);
        anat(&mut e, 5, 9, "Hepato-Biliary | Liver");
        let c = score_sentence(&[e.clone()], &[e]);
        for l in Level::ALL {
            assert_eq!(c.get(l).prf().f1, 1.0, "{l}");
        }
    }

    #[test]
    fn wrong_type_does_not_match() {
        let g = [trig(0, 3, TriggerType::Lesion)];
        let p = [trig(0, 3, TriggerType::Indication)];
        assert!(match_triggers(&g, &p).is_empty());
    }

    #[test]
    fn two_preds_one_gold() {
        let g = [trig(0, 10, TriggerType::Lesion)];
        let p = [trig(0, 4, TriggerType::Lesion), trig(5, 9, TriggerType::Lesion)];
        assert_eq!(match_triggers(&g, &p).len(), 1);
    }

    #[test]
    fn half_right() {
        let g = [trig(0, 3, TriggerType::Lesion), trig(10, 14, TriggerType::Lesion)];
        let p = [trig(0, 3, TriggerType::Lesion), trig(20, 24, TriggerType::Lesion)];
        let prf = score_sentence(&g, &p).trigger.prf();
        assert_eq!((prf.tp, prf.fp, prf.fn_), (1, 1, 1));
        assert_eq!((prf.p, prf.r, prf.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn wrong_span_right_label() {
        let mut g = trig(0, 3, TriggerType::Lesion);
        anat(&mut g, 5, 9, "Hepato-Biliary | Liver");
        let mut p = trig(0, 3, TriggerType::Lesion);
        anat(&mut p, 20, 25, "Hepato-Biliary | Liver");
        let c = score_sentence(&[g], &[p]);
        assert_eq!(c.anatomy_parent, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(c.anatomy_child, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(c.anatomy_span, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    // Ordering by start instead of end loses a pair here.
    #[test]
    fn nested_spans_still_maximal() {
        let g = [trig(1, 2, TriggerType::Lesion), trig(5, 6, TriggerType::Lesion)];
        let p = [trig(0, 10, TriggerType::Lesion), trig(1, 2, TriggerType::Lesion)];
        assert_eq!(match_triggers(&g, &p).len(), 2);
    }

    #[test]
    fn parent_only_match() {
        let mut g = trig(0, 3, TriggerType::Lesion);
        anat(&mut g, 5, 9, "Hepato-Biliary | Liver");
        let mut p = trig(0, 3, TriggerType::Lesion);
        anat(&mut p, 5, 9, "Hepato-Biliary | Pancreas");
        let c = score_sentence(&[g], &[p]);
        assert_eq!(c.anatomy_parent.tp, 1);
        assert_eq!(c.anatomy_child.tp, 0);
    }

    #[test]
    fn anatomies_under_unmatched_triggers_count_as_errors() {
        let mut g = trig(0, 3, TriggerType::Lesion);
        anat(&mut g, 5, 9, "Hepato-Biliary | Liver");
        let mut p = trig(0, 3, TriggerType::Indication);
        anat(&mut p, 5, 9, "Hepato-Biliary | Liver");
        let c = score_sentence(&[g], &[p]);
        for l in [Level::AnatomySpan, Level::AnatomyParent, Level::AnatomyChild] {
            assert_eq!(c.get(l), Counts { tp: 0, fp: 1, fn_: 1 });
        }
    }

    #[test]
    fn empty_is_zero_not_nan() {
        let prf = Counts::default().prf();
        assert_eq!((prf.p, prf.r, prf.f1), (0.0, 0.0, 0.0));
        let r = evaluate(&Annotations::new(), &Annotations::new(), Parallelism::Sequential);
        assert_eq!(r.micro.trigger.f1, 0.0);
        assert_eq!(r.sentences, 0);
    }

    #[test]
    fn report_json_shape() {
        let mut g = Annotations::new();
        g.insert(SentenceKey::new("d", 0), vec![trig(0, 3, TriggerType::Lesion)]);
        let r = evaluate(&g, &g, Parallelism::Sequential);
        let v = serde_json::to_value(&r).unwrap();
        for l in Level::ALL {
            let o = &v[l.to_string()];
            for f in ["tp", "fp", "fn", "p", "r", "f1"] {
                assert!(o.get(f).is_some(), "{l}.{f}");
            }
        }
        assert_eq!(v["trigger"]["f1"], 1.0);
        assert!(v["config"]["matching"].is_string());
    }
}
