//! Maps predicted surface strings back to character spans in the input sentence.
//!
//! Candidate search runs in three tiers and stops at the first tier that
//! yields anything:
//!
//! 1. verbatim occurrences of the term, preferring ones on word boundaries;
//! 2. runs of whole whitespace tokens whose normalized forms, concatenated
//!    without spaces, equal the normalized term without spaces (covers case,
//!    punctuation and hyphenation differences);
//! 3. longest common substring between the normalized sentence and the
//!    normalized term, snapped outward to whitespace-token boundaries. A
//!    candidate must share at least one normalized token with the term.
//!
//! Ties go to the leftmost candidate, or, with an anchor, to the candidate whose
//! midpoint is nearest the anchor's midpoint (leftmost on equal distance).

use crate::event::{char_slice, Event, Span};
use crate::text::{normalize, normalize_tokens, token_spans, Normalized};

pub fn align_term(sentence: &str, term: &str, anchor: Option<Span>) -> Option<Span> {
    let term = term.trim();
    if term.is_empty() {
        return None;
    }

    let (bounded, raw) = verbatim_occurrences(sentence, term);
    if !bounded.is_empty() {
        return choose(&bounded, anchor);
    }
    if !raw.is_empty() {
        return choose(&raw, anchor);
    }

    let term_tokens = normalize_tokens(term);
    if term_tokens.is_empty() {
        return None;
    }
    let hits = token_runs(sentence, &term_tokens.concat());
    if !hits.is_empty() {
        return choose(&hits, anchor);
    }
    let lcs = common_substring_candidates(sentence, &term_tokens);
    choose(&lcs, anchor)
}

fn token_runs(sentence: &str, target: &str) -> Vec<Span> {
    let spans = token_spans(sentence);
    let norms: Vec<String> = spans
        .iter()
        .map(|sp| char_slice(sentence, *sp).map(normalize).unwrap_or_default())
        .collect();
    let mut out = Vec::new();
    for i in 0..spans.len() {
        if norms[i].is_empty() || !target.starts_with(norms[i].as_str()) {
            continue;
        }
        let mut acc = String::new();
        for j in i..spans.len() {
            acc.push_str(&norms[j]);
            if acc.len() > target.len() || !target.starts_with(acc.as_str()) {
                break;
            }
            if acc == target && !norms[j].is_empty() {
                out.push(Span::new(spans[i].start, spans[j].end));
                break;
            }
        }
    }
    out
}

fn choose(cands: &[Span], anchor: Option<Span>) -> Option<Span> {
    match anchor {
        None => cands.iter().min_by_key(|s| (s.start, s.end)).copied(),
        Some(a) => cands
            .iter()
            .min_by_key(|s| (s.mid2().abs_diff(a.mid2()), s.start, s.end))
            .copied(),
    }
}

/// (word-bounded, all) verbatim occurrences in character offsets.
fn verbatim_occurrences(sentence: &str, term: &str) -> (Vec<Span>, Vec<Span>) {
    let chars: Vec<char> = sentence.chars().collect();
    let pat: Vec<char> = term.chars().collect();
    let mut bounded = Vec::new();
    let mut raw = Vec::new();
    if pat.len() > chars.len() {
        return (bounded, raw);
    }
    for start in 0..=chars.len() - pat.len() {
        if chars[start..start + pat.len()] != pat[..] {
            continue;
        }
        let span = Span::new(start, start + pat.len());
        let left_ok = start == 0
            || !chars[start - 1].is_alphanumeric()
            || !pat[0].is_alphanumeric();
        let right_ok = span.end == chars.len()
            || !chars[span.end].is_alphanumeric()
            || !pat[pat.len() - 1].is_alphanumeric();
        if left_ok && right_ok {
            bounded.push(span);
        }
        raw.push(span);
    }
    (bounded, raw)
}

fn common_substring_candidates(sentence: &str, term_tokens: &[String]) -> Vec<Span> {
    let norm = Normalized::new(sentence);
    let term: Vec<char> = term_tokens.join(" ").chars().collect();
    let s = &norm.chars;
    if s.is_empty() || term.is_empty() {
        return Vec::new();
    }
    let tokens = token_spans(sentence);
    let token_of = |orig: usize| tokens.iter().find(|t| t.start <= orig && orig < t.end).copied();

    // run[j] = length of the common run ending at (i, j).
    let mut prev = vec![0usize; term.len() + 1];
    let mut cur = vec![0usize; term.len() + 1];
    let mut best = 0usize;
    let mut out: Vec<Span> = Vec::new();
    for i in 0..s.len() {
        for j in 0..term.len() {
            cur[j + 1] = if s[i] == term[j] { prev[j] + 1 } else { 0 };
        }
        for j in 0..term.len() {
            let len = cur[j + 1];
            if len == 0 {
                continue;
            }
            let extends = i + 1 < s.len() && j + 1 < term.len() && s[i + 1] == term[j + 1];
            if extends {
                continue;
            }
            let mut a = i + 1 - len;
            let mut b = i;
            while a <= b && s[a] == ' ' {
                a += 1;
            }
            while b > a && s[b] == ' ' {
                b -= 1;
            }
            if a > b || s[a] == ' ' {
                continue;
            }
            let score = b - a + 1;
            if score < best {
                continue;
            }
            let (Some(first), Some(last)) = (token_of(norm.origin[a]), token_of(norm.origin[b]))
            else {
                continue;
            };
            let span = Span::new(first.start, last.end);
            let shares_token = char_slice(sentence, span).is_some_and(|slice| {
                normalize_tokens(slice).iter().any(|t| term_tokens.contains(t))
            });
            if !shares_token {
                continue;
            }
            if score > best {
                best = score;
                out.clear();
            }
            if !out.contains(&span) {
                out.push(span);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    out
}

/// Fills missing spans: triggers without an anchor, anatomies anchored on their
/// trigger. Entities that cannot be aligned keep `span = None`. An aligned
/// entity whose text differs from the sentence surface takes the surface text,
/// so every present span slices to its entity text.
pub fn attach_spans(sentence: &str, events: &[Event]) -> Vec<Event> {
    events
        .iter()
        .map(|event| {
            let mut event = event.clone();
            if event.trigger.span.is_none() {
                if let Some(span) = align_term(sentence, &event.trigger.text, None) {
                    set_surface(sentence, span, &mut event.trigger.text);
                    event.trigger.span = Some(span);
                }
            }
            let anchor = event.trigger.span;
            for anatomy in &mut event.anatomies {
                if anatomy.span.is_none() {
                    if let Some(span) = align_term(sentence, &anatomy.text, anchor) {
                        set_surface(sentence, span, &mut anatomy.text);
                        anatomy.span = Some(span);
                    }
                }
            }
            event
        })
        .collect()
}

fn set_surface(sentence: &str, span: Span, text: &mut String) {
    if let Some(surface) = char_slice(sentence, span) {
        if surface != text {
            *text = surface.to_string();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::validate_event;
    use crate::ontology::{Ontology, TriggerType};
    use proptest::prelude::*;

    fn slice(s: &str, sp: Option<Span>) -> Option<&str> {
        sp.and_then(|sp| char_slice(s, sp))
    }

    #[test]
    fn unique_token() {
        let s = "the liver is enlarged";
        assert_eq!(align_term(s, "liver", None), Some(Span::new(4, 9)));
    }

    // Oracle: enumerate every occurrence, then pick by the stated rule.
    fn brute_force(s: &str, term: &str, anchor: Option<Span>) -> Span {
        let chars: Vec<char> = s.chars().collect();
        let t: Vec<char> = term.chars().collect();
        let occ: Vec<Span> = (0..=chars.len() - t.len())
            .filter(|&i| chars[i..i + t.len()] == t[..])
            .map(|i| Span::new(i, i + t.len()))
            .collect();
        match anchor {
            None => occ[0],
            Some(a) => {
                let am = (a.start + a.end) as f64 / 2.0;
                *occ.iter()
                    .min_by(|x, y| {
                        let dx = ((x.start + x.end) as f64 / 2.0 - am).abs();
                        let dy = ((y.start + y.end) as f64 / 2.0 - am).abs();
                        dx.partial_cmp(&dy).unwrap()
                    })
                    .unwrap()
            }
        }
    }

    #[test]
    fn leftmost_without_anchor() {
        let s = "left lung and right lung";
        let got = align_term(s, "lung", None);
        assert_eq!(got, Some(brute_force(s, "lung", None)));
        assert_eq!(got, Some(Span::new(5, 9)));
    }

    #[test]
    fn nearest_to_anchor() {
        let s = "left lung and right lung nodule";
        let anchor = align_term(s, "nodule", None).unwrap();
        let got = align_term(s, "lung", Some(anchor));
        assert_eq!(got, Some(brute_force(s, "lung", Some(anchor))));
        assert_eq!(got, Some(Span::new(20, 24)));
    }

    #[test]
    fn punctuation_and_case() {
        let s = "Mass in the Liver, left lobe.";
        let sp = align_term(s, "liver", None);
        assert_eq!(slice(s, sp), Some("Liver,"));
        let sp = align_term(s, "left lobe", None);
        assert_eq!(slice(s, sp), Some("left lobe"));
        let sp = align_term(s, "the left lobe of liver", None);
        assert!(sp.is_some());
    }

    #[test]
    fn multi_token_common_substring_snaps_to_tokens() {
        let s = "hypermetabolic soft tissue density insinuating";
        let sp = align_term(s, "soft-tissue density", None);
        assert_eq!(slice(s, sp), Some("soft tissue density"));
    }

    #[test]
    fn unalignable() {
        assert_eq!(align_term("no acute findings", "pancreas", None), None);
        assert_eq!(align_term("no acute findings", "tail of pancreas", None), None);
        assert_eq!(align_term("anything", "  ", None), None);
    }

    #[test]
    fn reference_sentence_spans() {
        let s = "18 x 17 mm hypermetabolic soft tissue density insinuating between the left lobe of the liver and anterior abdominal wall ( the R/112 ) with maximum SUV 14.4 .";
        let ont = Ontology::builtin();
        let liver = ont.parse_label("Hepato-Biliary | Liver").unwrap();
        let wall = ont.parse_label("Abdomen | Abdominal Wall").unwrap();
        let event = Event::new("density", TriggerType::Lesion)
            .with_anatomy("soft tissue", Some(liver.clone()))
            .with_anatomy("left lobe of the liver", Some(liver))
            .with_anatomy("anterior abdominal wall", Some(wall));
        let out = attach_spans(s, &[event]);
        let e = &out[0];
        // Offsets counted by hand on the printed sentence.
        assert_eq!(e.trigger.span, Some(Span::new(38, 45)));
        assert_eq!(e.anatomies[0].span, Some(Span::new(26, 37)));
        assert_eq!(e.anatomies[1].span, Some(Span::new(70, 92)));
        assert_eq!(e.anatomies[2].span, Some(Span::new(97, 120)));
        assert!(validate_event(s, e).is_empty());
        assert_eq!(attach_spans(s, &out), out);
    }

    #[test]
    fn missing_entity_keeps_event() {
        let e = Event::new("nodule", TriggerType::Lesion).with_anatomy("spleen", None);
        let out = attach_spans("small nodule seen", &[e]);
        assert_eq!(out[0].trigger.span, Some(Span::new(6, 12)));
        assert_eq!(out[0].anatomies.len(), 1);
        assert_eq!(out[0].anatomies[0].span, None);
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z]{2,7}"
    }

    proptest! {
        #[test]
        fn unique_verbatim_occurrence_is_found(
            words in prop::collection::vec(word(), 1..12),
            term in prop::collection::vec("[A-Z][a-z]{2,6}", 1..4),
            pos in 0usize..12,
        ) {
            let term = term.join(" ");
            let pos = pos.min(words.len());
            let mut parts = words.clone();
            parts.insert(pos, term.clone());
            let s = parts.join(" ");
            prop_assume!(s.matches(&term).count() == 1);
            let sp = align_term(&s, &term, None);
            prop_assert_eq!(slice(&s, sp), Some(term.as_str()));
        }

        #[test]
        fn anchor_irrelevant_with_single_candidate(
            words in prop::collection::vec(word(), 2..10),
            a in 0usize..30, len in 1usize..5,
        ) {
            let s = format!("{} Target", words.join(" "));
            let without = align_term(&s, "Target", None);
            let with = align_term(&s, "Target", Some(Span::new(a, a + len)));
            prop_assert_eq!(without, with);
            prop_assert_eq!(align_term(&s, "Target", None), without);
        }
    }
}
