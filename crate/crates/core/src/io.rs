//! JSON Lines file formats.
//!
//! Corpus lines: `{"id", "exam_type", "sentences": [..]}`.
//! Annotation lines: `{"doc_id", "sent", "events": [{"trigger": {"text", "start",
//! "end", "type"}, "anatomies": [{"text", "start", "end", "parent", "child"}]}]}`.
//! Offsets and labels may be `null` in predictions.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{
    validate_event, AnatomyEntity, Annotations, Corpus, Document, Event, SentenceKey, Span, Trigger,
};
use crate::ontology::{Ontology, TriggerType};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

impl FormatError {
    fn schema(line: usize, message: impl Into<String>) -> Self {
        FormatError::Schema {
            line,
            message: message.into(),
        }
    }
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(FormatError::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

/// Reads a corpus; ids must be unique and sentences non-empty.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, FormatError> {
    let mut ids = HashSet::new();
    let mut documents = Vec::new();
    for item in lines(reader) {
        let (line, text) = item?;
        let doc: Document =
            serde_json::from_str(&text).map_err(|source| FormatError::Json { line, source })?;
        if !ids.insert(doc.id.clone()) {
            return Err(FormatError::schema(line, format!("duplicate document id `{}`", doc.id)));
        }
        if let Some(i) = doc.sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(FormatError::schema(line, format!("document `{}` sentence {i} is empty", doc.id)));
        }
        documents.push(doc);
    }
    Ok(Corpus::new(documents))
}

pub fn write_corpus<W: Write>(mut writer: W, corpus: &Corpus) -> Result<(), FormatError> {
    for doc in &corpus.documents {
        serde_json::to_writer(&mut writer, doc).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub text: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    #[serde(rename = "type")]
    pub kind: TriggerType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnatomyRecord {
    pub text: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub parent: Option<String>,
    pub child: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub trigger: TriggerRecord,
    #[serde(default)]
    pub anatomies: Vec<AnatomyRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub doc_id: String,
    pub sent: usize,
    pub events: Vec<EventRecord>,
}

fn span_of(start: Option<usize>, end: Option<usize>) -> Result<Option<Span>, String> {
    match (start, end) {
        (Some(s), Some(e)) => Ok(Some(Span::new(s, e))),
        (None, None) => Ok(None),
        _ => Err("start and end must be given together".into()),
    }
}

impl AnnotationRecord {
    pub fn from_events(key: &SentenceKey, events: &[Event]) -> Self {
        AnnotationRecord {
            doc_id: key.doc_id.clone(),
            sent: key.index,
            events: events
                .iter()
                .map(|e| EventRecord {
                    trigger: TriggerRecord {
                        text: e.trigger.text.clone(),
                        start: e.trigger.span.map(|s| s.start),
                        end: e.trigger.span.map(|s| s.end),
                        kind: e.trigger.kind,
                    },
                    anatomies: e
                        .anatomies
                        .iter()
                        .map(|a| AnatomyRecord {
                            text: a.text.clone(),
                            start: a.span.map(|s| s.start),
                            end: a.span.map(|s| s.end),
                            parent: a.label.as_ref().map(|l| l.parent().to_string()),
                            child: a.label.as_ref().map(|l| l.child().to_string()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_events(&self, ontology: &Ontology) -> Result<Vec<Event>, String> {
        self.events
            .iter()
            .map(|e| {
                let anatomies = e
                    .anatomies
                    .iter()
                    .map(|a| {
                        let label = match (&a.parent, &a.child) {
                            (Some(p), Some(c)) => Some(
                                ontology
                                    .parse_label(&format!("{p} | {c}"))
                                    .map_err(|err| err.to_string())?,
                            ),
                            (None, None) => None,
                            _ => return Err(format!("anatomy `{}` needs both parent and child", a.text)),
                        };
                        Ok(AnatomyEntity {
                            text: a.text.clone(),
                            span: span_of(a.start, a.end)?,
                            label,
                        })
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(Event {
                    trigger: Trigger {
                        text: e.trigger.text.clone(),
                        span: span_of(e.trigger.start, e.trigger.end)?,
                        kind: e.trigger.kind,
                    },
                    anatomies,
                })
            })
            .collect()
    }
}

/// Reads annotations, checking labels against `ontology` and, when a corpus
/// is given, document ids, sentence indices and offsets against it.
pub fn read_annotations<R: BufRead>(
    reader: R,
    ontology: &Ontology,
    corpus: Option<&Corpus>,
) -> Result<Annotations, FormatError> {
    let mut out = Annotations::new();
    for item in lines(reader) {
        let (line, text) = item?;
        let rec: AnnotationRecord =
            serde_json::from_str(&text).map_err(|source| FormatError::Json { line, source })?;
        let events = rec.to_events(ontology).map_err(|m| FormatError::schema(line, m))?;
        let key = SentenceKey::new(rec.doc_id, rec.sent);
        if let Some(corpus) = corpus {
            let Some(doc) = corpus.document(&key.doc_id) else {
                return Err(FormatError::schema(line, format!("unknown document `{}`", key.doc_id)));
            };
            let Some(sentence) = doc.sentences.get(key.index) else {
                return Err(FormatError::schema(line, format!("{key}: sentence index out of range")));
            };
            for e in &events {
                if let Some(v) = validate_event(sentence, e).first() {
                    return Err(FormatError::schema(line, format!("{key}: {v:?}")));
                }
            }
        }
        if out.insert(key.clone(), events).is_some() {
            return Err(FormatError::schema(line, format!("{key} annotated twice")));
        }
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(mut writer: W, annotations: &Annotations) -> Result<(), FormatError> {
    for (key, events) in annotations {
        serde_json::to_writer(&mut writer, &AnnotationRecord::from_events(key, events))
            .map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes any serializable records, one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, records: &[T]) -> Result<(), FormatError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::attach_spans;

    const CORPUS: &str = r#"{"id":"r1","exam_type":"CT","sentences":["Liver lesion noted .","No findings ."]}
{"id":"r2","exam_type":"MR","sentences":["Lung nodule ."]}
"#;

    #[test]
    fn corpus_round_trip() {
        let c = read_corpus(CORPUS.as_bytes()).unwrap();
        assert_eq!(c.sentence_count(), 3);
        let mut buf = Vec::new();
        write_corpus(&mut buf, &c).unwrap();
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn corpus_schema_errors() {
        let dup = "{\"id\":\"a\",\"exam_type\":\"\",\"sentences\":[\"x\"]}\n{\"id\":\"a\",\"exam_type\":\"\",\"sentences\":[\"y\"]}";
        assert!(matches!(read_corpus(dup.as_bytes()), Err(FormatError::Schema { line: 2, .. })));
        let empty = "{\"id\":\"a\",\"exam_type\":\"\",\"sentences\":[\" \"]}";
        assert!(matches!(read_corpus(empty.as_bytes()), Err(FormatError::Schema { .. })));
        assert!(matches!(read_corpus("{".as_bytes()), Err(FormatError::Json { line: 1, .. })));
    }

    #[test]
    fn annotations_round_trip_and_validate() {
        let c = read_corpus(CORPUS.as_bytes()).unwrap();
        let o = Ontology::builtin();
        let e = Event::new("lesion", TriggerType::Lesion)
            .with_anatomy("Liver", Some(o.parse_label("Hepato-Biliary | Liver").unwrap()));
        let mut ann = Annotations::new();
        ann.insert(SentenceKey::new("r1", 0), attach_spans("Liver lesion noted .", &[e]));
        ann.insert(SentenceKey::new("r1", 1), Vec::new());
        let mut buf = Vec::new();
        write_annotations(&mut buf, &ann).unwrap();
        assert_eq!(read_annotations(buf.as_slice(), o, Some(&c)).unwrap(), ann);

        let bad_offset = r#"{"doc_id":"r1","sent":0,"events":[{"trigger":{"text":"lesion","start":0,"end":6,"type":"Lesion"},"anatomies":[]}]}"#;
        assert!(read_annotations(bad_offset.as_bytes(), o, Some(&c)).is_err());
        let bad_doc = r#"{"doc_id":"zz","sent":0,"events":[]}"#;
        assert!(read_annotations(bad_doc.as_bytes(), o, Some(&c)).is_err());
        assert!(read_annotations(bad_doc.as_bytes(), o, None).is_ok());
        let bad_label = r#"{"doc_id":"r1","sent":0,"events":[{"trigger":{"text":"lesion","start":null,"end":null,"type":"Lesion"},"anatomies":[{"text":"Liver","start":null,"end":null,"parent":"Brain","child":"Liver"}]}]}"#;
        assert!(read_annotations(bad_label.as_bytes(), o, None).is_err());
    }
}
