use std::fmt;
use std::str::FromStr;

use super::{is_none_answer, marker_positions, Parsed, ParseWarning, WarningKind, NONE};
use crate::align::attach_spans;
use crate::event::{AnatomyEntity, Event, Trigger};
use crate::ontology::{AnatomyLabel, Ontology, TriggerType};

const STATE: &str = "state:";
const ANSWER: &str = "answer:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockState {
    TriggerDetection,
    TriggerClassification,
    SpanDetection,
    Classification,
}

impl BlockState {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockState::TriggerDetection => "trigger detection",
            BlockState::TriggerClassification => "trigger classification",
            BlockState::SpanDetection => "span detection",
            BlockState::Classification => "classification",
        }
    }

    pub(crate) fn block(self, answer: &str) -> String {
        format!("{STATE} {} {ANSWER} {answer}", self.as_str())
    }
}

impl fmt::Display for BlockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockState {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
            "trigger detection" => Ok(BlockState::TriggerDetection),
            "trigger classification" => Ok(BlockState::TriggerClassification),
            "span detection" => Ok(BlockState::SpanDetection),
            "classification" => Ok(BlockState::Classification),
            _ => Err(()),
        }
    }
}

pub(crate) fn join_texts<'a>(texts: impl Iterator<Item = &'a str>) -> String {
    let v: Vec<&str> = texts.collect();
    if v.is_empty() {
        NONE.to_string()
    } else {
        v.join(", ")
    }
}

/// Emits detection, then one classification per trigger, then one span
/// detection per trigger, then one classification per labeled anatomy.
pub fn emit_blocks(events: &[Event]) -> String {
    let mut blocks = vec![BlockState::TriggerDetection
        .block(&join_texts(events.iter().map(|e| e.trigger.text.as_str())))];
    for e in events {
        blocks.push(
            BlockState::TriggerClassification
                .block(&format!("{} [ {} ]", e.trigger.text, e.trigger.kind)),
        );
    }
    for e in events {
        blocks.push(
            BlockState::SpanDetection
                .block(&join_texts(e.anatomies.iter().map(|a| a.text.as_str()))),
        );
    }
    for a in events.iter().flat_map(|e| &e.anatomies) {
        if let Some(label) = &a.label {
            blocks.push(BlockState::Classification.block(&format!("{} [ {} ]", a.text, label)));
        }
    }
    blocks.join(" ")
}

struct RawBlock<'a> {
    state: BlockState,
    answer: &'a str,
}

fn split_blocks<'a>(text: &'a str, warnings: &mut Vec<ParseWarning>) -> Vec<RawBlock<'a>> {
    let starts = marker_positions(text, STATE);
    if starts.is_empty() {
        if text.trim().is_empty() {
            warnings.push(ParseWarning::new(WarningKind::EmptyOutput, ""));
        } else {
            warnings.push(ParseWarning::new(WarningKind::NoBlocksFound, text.trim()));
        }
        return Vec::new();
    }
    let head = text[..starts[0]].trim();
    if !head.is_empty() {
        warnings.push(ParseWarning::new(WarningKind::StrayText, head));
    }
    let mut out = Vec::new();
    for (n, &pos) in starts.iter().enumerate() {
        let end = starts.get(n + 1).copied().unwrap_or(text.len());
        let body = &text[pos + STATE.len()..end];
        let Some(ans) = body.find(ANSWER) else {
            warnings.push(ParseWarning::new(
                WarningKind::MalformedAnswer,
                text[pos..end].trim(),
            ));
            continue;
        };
        let name = &body[..ans];
        let answer = body[ans + ANSWER.len()..].trim();
        match name.parse::<BlockState>() {
            Ok(state) => out.push(RawBlock { state, answer }),
            Err(()) => warnings.push(ParseWarning::new(
                WarningKind::UnknownState,
                text[pos..end].trim(),
            )),
        }
    }
    out
}

fn split_list(answer: &str) -> Vec<String> {
    if is_none_answer(answer) {
        return Vec::new();
    }
    answer
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// `text [ label ]`
fn split_labeled(answer: &str) -> Option<(&str, &str)> {
    let open = answer.rfind('[')?;
    let close = answer[open..].find(']')? + open;
    if !answer[close + 1..].trim().is_empty() {
        return None;
    }
    let text = answer[..open].trim();
    let label = answer[open + 1..close].trim();
    (!text.is_empty()).then_some((text, label))
}

struct Slot {
    text: String,
    kind: Option<TriggerType>,
    anatomies: Vec<AnatomyEntity>,
}

/// Parses block output into span-less events.
///
/// Later blocks are joined to earlier ones by exact answer text; duplicate
/// texts are consumed left to right. Span detection block `i` belongs to the
/// `i`-th detected trigger. Triggers that never receive a type are dropped.
pub fn parse_blocks_text(text: &str, ontology: &Ontology) -> Parsed<Vec<Event>> {
    let mut warnings = Vec::new();
    let blocks = split_blocks(text, &mut warnings);

    let mut slots: Vec<Slot> = Vec::new();
    for b in blocks.iter().filter(|b| b.state == BlockState::TriggerDetection) {
        slots.extend(split_list(b.answer).into_iter().map(|text| Slot {
            text,
            kind: None,
            anatomies: Vec::new(),
        }));
    }

    for b in blocks.iter().filter(|b| b.state == BlockState::TriggerClassification) {
        let parsed = split_labeled(b.answer)
            .and_then(|(t, l)| l.parse::<TriggerType>().ok().map(|k| (t, k)));
        let Some((text, kind)) = parsed else {
            warnings.push(ParseWarning::new(WarningKind::UnparseableLabel, b.answer));
            continue;
        };
        match slots.iter_mut().find(|s| s.kind.is_none() && s.text == text) {
            Some(slot) => slot.kind = Some(kind),
            None => {
                warnings.push(ParseWarning::new(WarningKind::UnmatchedBlock, b.answer));
                slots.push(Slot {
                    text: text.to_string(),
                    kind: Some(kind),
                    anatomies: Vec::new(),
                });
            }
        }
    }

    let mut span_blocks = blocks.iter().filter(|b| b.state == BlockState::SpanDetection);
    for slot in slots.iter_mut() {
        let Some(b) = span_blocks.next() else { break };
        slot.anatomies = split_list(b.answer)
            .into_iter()
            .map(|text| AnatomyEntity {
                text,
                span: None,
                label: None,
            })
            .collect();
    }
    for extra in span_blocks {
        warnings.push(ParseWarning::new(WarningKind::UnmatchedBlock, extra.answer));
    }

    for b in blocks.iter().filter(|b| b.state == BlockState::Classification) {
        let Some((text, label)) = parse_labeled_anatomy(b.answer, ontology) else {
            warnings.push(ParseWarning::new(WarningKind::UnparseableLabel, b.answer));
            continue;
        };
        let target = slots
            .iter_mut()
            .flat_map(|s| s.anatomies.iter_mut())
            .find(|a| a.label.is_none() && a.text == text);
        match target {
            Some(a) => a.label = Some(label),
            None => warnings.push(ParseWarning::new(WarningKind::UnmatchedBlock, b.answer)),
        }
    }

    let mut events = Vec::new();
    for slot in slots {
        match slot.kind {
            Some(kind) => events.push(Event {
                trigger: Trigger {
                    text: slot.text,
                    span: None,
                    kind,
                },
                anatomies: slot.anatomies,
            }),
            None => warnings.push(ParseWarning::new(WarningKind::UnmatchedBlock, slot.text)),
        }
    }
    Parsed {
        value: events,
        warnings,
    }
}

fn parse_labeled_anatomy<'a>(answer: &'a str, ontology: &Ontology) -> Option<(&'a str, AnatomyLabel)> {
    let (text, label) = split_labeled(answer)?;
    Some((text, ontology.parse_label(label).ok()?))
}

/// Parses block output and aligns spans in `sentence`.
pub fn parse_blocks(text: &str, sentence: &str, ontology: &Ontology) -> Parsed<Vec<Event>> {
    let Parsed { value, warnings } = parse_blocks_text(text, ontology);
    Parsed {
        value: attach_spans(sentence, &value),
        warnings,
    }
}

/// Anatomies named by `span detection` and `classification` blocks, without
/// requiring trigger blocks.
pub(crate) fn parse_anatomy_blocks(text: &str, ontology: &Ontology) -> Parsed<Vec<AnatomyEntity>> {
    let mut warnings = Vec::new();
    let blocks = split_blocks(text, &mut warnings);
    let mut anatomies: Vec<AnatomyEntity> = blocks
        .iter()
        .filter(|b| b.state == BlockState::SpanDetection)
        .flat_map(|b| split_list(b.answer))
        .map(|text| AnatomyEntity {
            text,
            span: None,
            label: None,
        })
        .collect();
    for b in blocks.iter().filter(|b| b.state == BlockState::Classification) {
        let Some((text, label)) = parse_labeled_anatomy(b.answer, ontology) else {
            warnings.push(ParseWarning::new(WarningKind::UnparseableLabel, b.answer));
            continue;
        };
        match anatomies.iter_mut().find(|a| a.label.is_none() && a.text == text) {
            Some(a) => a.label = Some(label),
            None => anatomies.push(AnatomyEntity {
                text: text.to_string(),
                span: None,
                label: Some(label),
            }),
        }
    }
    Parsed {
        value: anatomies,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_BLOCKS: &str = "state: trigger detection answer: density state: trigger classification answer: density [ Lesion ] state: span detection answer: soft tissue, left lobe of the liver, anterior abdominal wall state: classification answer: soft tissue [ Hepato-Biliary | Liver ] state: classification answer: left lobe of the liver [ Hepato-Biliary | Liver ] state: classification answer: anterior abdominal wall [ Abdomen | Abdominal Wall ]";

    fn ont() -> &'static Ontology {
        Ontology::builtin()
    }

    #[test]
    fn reference_string_parses_and_re_emits() {
        let p = parse_blocks_text(REFERENCE_BLOCKS, ont());
        assert!(p.warnings.is_empty(), "{:?}", p.warnings);
        assert_eq!(p.value.len(), 1);
        let e = &p.value[0];
        assert_eq!(e.trigger.text, "density");
        assert_eq!(e.trigger.kind, TriggerType::Lesion);
        assert_eq!(e.anatomies.len(), 3);
        assert_eq!(emit_blocks(&p.value), REFERENCE_BLOCKS);
    }

    #[test]
    fn empty_emission() {
        assert_eq!(emit_blocks(&[]), "state: trigger detection answer: none");
        let p = parse_blocks_text("state: trigger detection answer: none", ont());
        assert!(p.value.is_empty());
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn duplicate_texts_join_left_to_right() {
        let lung = ont().parse_label("Respiratory | Lung").unwrap();
        let pleura = ont().parse_label("Respiratory | Pleural Membrane").unwrap();
        let events = vec![
            Event::new("nodule", TriggerType::Lesion).with_anatomy("right", Some(lung.clone())),
            Event::new("nodule", TriggerType::MedicalProblem)
                .with_anatomy("right", Some(pleura.clone())),
        ];
        let text = emit_blocks(&events);
        let p = parse_blocks_text(&text, ont());
        assert!(p.warnings.is_empty());
        assert_eq!(p.value, events);
    }

    #[test]
    fn unknown_states_and_garbage() {
        let p = parse_blocks_text(
            "state: trigger detection answer: mass state: vibes answer: x state: trigger classification answer: mass [ Lesion ] state: span detection",
            ont(),
        );
        assert_eq!(p.value.len(), 1);
        let kinds: Vec<WarningKind> = p.warnings.iter().map(|w| w.kind).collect();
        assert_eq!(kinds, vec![WarningKind::UnknownState, WarningKind::MalformedAnswer]);

        let p = parse_blocks_text("completely unrelated", ont());
        assert!(p.value.is_empty());
        assert_eq!(p.warnings[0].kind, WarningKind::NoBlocksFound);
    }

    #[test]
    fn unclassified_trigger_is_dropped() {
        let p = parse_blocks_text(
            "state: trigger detection answer: mass, cyst state: trigger classification answer: cyst [ Lesion ]",
            ont(),
        );
        assert_eq!(p.value.len(), 1);
        assert_eq!(p.value[0].trigger.text, "cyst");
        assert_eq!(p.warnings[0].kind, WarningKind::UnmatchedBlock);
    }
}
