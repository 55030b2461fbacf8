//! Event data model and span arithmetic.
//!
//! All offsets count Unicode scalar values (Rust `char`s), never bytes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::{AnatomyLabel, TriggerType};

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Twice the midpoint, kept integral for exact distance comparisons.
    pub(crate) fn mid2(&self) -> usize {
        self.start + self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        overlaps(*self, *other)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Half-open overlap: touching spans do not overlap.
pub fn overlaps(a: Span, b: Span) -> bool {
    a.start < b.end && b.start < a.end
}

/// Returns the characters of `text` covered by `span`, or `None` when out of bounds.
pub fn char_slice(text: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let start = indices.nth(span.start)?;
    let end = if span.end == span.start {
        start
    } else {
        indices.nth(span.end - span.start - 1)?
    };
    Some(&text[start..end])
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger {
    pub text: String,
    pub span: Option<Span>,
    pub kind: TriggerType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnatomyEntity {
    pub text: String,
    pub span: Option<Span>,
    pub label: Option<AnatomyLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub trigger: Trigger,
    pub anatomies: Vec<AnatomyEntity>,
}

impl Event {
    pub fn new(text: impl Into<String>, kind: TriggerType) -> Self {
        Event {
            trigger: Trigger {
                text: text.into(),
                span: None,
                kind,
            },
            anatomies: Vec::new(),
        }
    }

    pub fn with_anatomy(mut self, text: impl Into<String>, label: Option<AnatomyLabel>) -> Self {
        self.anatomies.push(AnatomyEntity {
            text: text.into(),
            span: None,
            label,
        });
        self
    }

    /// Copy of this event with every span cleared.
    pub fn without_spans(&self) -> Event {
        let mut e = self.clone();
        e.trigger.span = None;
        for a in &mut e.anatomies {
            a.span = None;
        }
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityRef {
    Trigger,
    Anatomy(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptySpan { entity: EntityRef, span: Span },
    OutOfBounds { entity: EntityRef, span: Span, len: usize },
    TextMismatch { entity: EntityRef, expected: String, found: String },
}

/// Checks that every present span is in bounds and slices to the entity text.
pub fn validate_event(sentence: &str, event: &Event) -> Vec<Violation> {
    let len = char_len(sentence);
    let mut out = Vec::new();
    let mut check = |entity: EntityRef, text: &str, span: Option<Span>| {
        let Some(span) = span else { return };
        if span.is_empty() {
            out.push(Violation::EmptySpan { entity, span });
        } else if span.end > len {
            out.push(Violation::OutOfBounds { entity, span, len });
        } else {
            let found = char_slice(sentence, span).unwrap_or_default();
            if found != text {
                out.push(Violation::TextMismatch {
                    entity,
                    expected: text.to_string(),
                    found: found.to_string(),
                });
            }
        }
    };
    check(EntityRef::Trigger, &event.trigger.text, event.trigger.span);
    for (i, a) in event.anatomies.iter().enumerate() {
        check(EntityRef::Anatomy(i), &a.text, a.span);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceKey {
    pub doc_id: String,
    pub index: usize,
}

impl SentenceKey {
    pub fn new(doc_id: impl Into<String>, index: usize) -> Self {
        SentenceKey {
            doc_id: doc_id.into(),
            index,
        }
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sentence<'a> {
    pub doc_id: &'a str,
    pub index: usize,
    pub text: &'a str,
}

impl Sentence<'_> {
    pub fn key(&self) -> SentenceKey {
        SentenceKey::new(self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub exam_type: String,
    pub sentences: Vec<String>,
}

impl Document {
    pub fn sentence(&self, index: usize) -> Option<Sentence<'_>> {
        self.sentences.get(index).map(|text| Sentence {
            doc_id: &self.id,
            index,
            text,
        })
    }

    pub fn iter_sentences(&self) -> impl Iterator<Item = Sentence<'_>> {
        self.sentences.iter().enumerate().map(|(index, text)| Sentence {
            doc_id: &self.id,
            index,
            text,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        Corpus { documents }
    }

    pub fn sentences(&self) -> impl Iterator<Item = Sentence<'_>> {
        self.documents.iter().flat_map(Document::iter_sentences)
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn sentence(&self, key: &SentenceKey) -> Option<Sentence<'_>> {
        self.document(&key.doc_id)?.sentence(key.index)
    }
}

/// Events per sentence. Sentences without an entry carry no events.
pub type Annotations = BTreeMap<SentenceKey, Vec<Event>>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::TriggerType;
    use proptest::prelude::*;

    #[test]
    fn overlap_examples() {
        assert!(overlaps(Span::new(0, 5), Span::new(4, 9)));
        assert!(!overlaps(Span::new(0, 5), Span::new(5, 9)));
        assert!(overlaps(Span::new(2, 3), Span::new(0, 10)));
    }

    proptest! {
        #[test]
        fn overlap_symmetric_and_reflexive(a in 0usize..50, la in 1usize..20, b in 0usize..50, lb in 1usize..20) {
            let x = Span::new(a, a + la);
            let y = Span::new(b, b + lb);
            prop_assert_eq!(overlaps(x, y), overlaps(y, x));
            prop_assert!(overlaps(x, x));
            let disjoint = Span::new(a + la, a + la + lb);
            prop_assert!(!overlaps(x, disjoint));
        }
    }

    #[test]
    fn char_slicing_is_scalar_based() {
        let s = "size 4±1 mm";
        assert_eq!(char_slice(s, Span::new(5, 8)), Some("4±1"));
        assert_eq!(char_slice(s, Span::new(9, 11)), Some("mm"));
        assert_eq!(char_slice(s, Span::new(9, 12)), None);
    }

    #[test]
    fn validate_examples() {
        let sentence = "the liver and lung";
        let mut e = Event::new("liver", TriggerType::Lesion);
        e.trigger.span = Some(Span::new(4, 9));
        assert!(validate_event(sentence, &e).is_empty());

        let mut oob = e.clone();
        oob.trigger.span = Some(Span::new(15, 30));
        assert!(matches!(
            validate_event(sentence, &oob).as_slice(),
            [Violation::OutOfBounds { .. }]
        ));

        let mut mismatch = e.clone().with_anatomy("liver", None);
        mismatch.anatomies[0].span = Some(Span::new(14, 18));
        assert!(matches!(
            validate_event(sentence, &mismatch).as_slice(),
            [Violation::TextMismatch { entity: EntityRef::Anatomy(0), .. }]
        ));
    }
}
