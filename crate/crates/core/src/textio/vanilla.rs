use super::{is_none_answer, marker_positions, Parsed, ParseWarning, StepKind, WarningKind, NONE};
use crate::align::{align_term, attach_spans};
use crate::event::{AnatomyEntity, Event, Trigger};
use crate::ontology::{Ontology, TriggerType};

const TRIGGER: &str = "trigger:";
const ANATOMIES: &str = "anatomies:";

fn join_items<'a>(items: impl Iterator<Item = String> + 'a) -> String {
    let items: Vec<String> = items.collect();
    if items.is_empty() {
        NONE.to_string()
    } else {
        items.join(", ")
    }
}

pub fn emit_triggers(events: &[Event]) -> String {
    format!(
        "{TRIGGER} {}",
        join_items(
            events
                .iter()
                .map(|e| format!("{} [ {} ]", e.trigger.text, e.trigger.kind))
        )
    )
}

/// Unlabeled anatomies are emitted as bare text.
pub fn emit_anatomies<'a>(anatomies: impl IntoIterator<Item = &'a AnatomyEntity>) -> String {
    format!(
        "{ANATOMIES} {}",
        join_items(anatomies.into_iter().map(|a| match &a.label {
            Some(l) => format!("{} [ {} ]", a.text, l),
            None => a.text.clone(),
        }))
    )
}

/// Output string in the vanilla grammar for `step`.
///
/// Trigger steps list triggers only, anatomy and normalization steps list the
/// anatomies of every given event, one-step output concatenates one
/// `trigger: ... anatomies: ...` group per event.
pub fn emit_vanilla(step: StepKind, events: &[Event]) -> String {
    match step {
        StepKind::TriggerStep | StepKind::AuxTriggerClassify => emit_triggers(events),
        StepKind::AnatomyStep | StepKind::NormalizeStep | StepKind::AuxAnatomySpan => {
            emit_anatomies(events.iter().flat_map(|e| &e.anatomies))
        }
        StepKind::OneStepVanilla | StepKind::OneStepBlocks => {
            if events.is_empty() {
                return format!("{TRIGGER} {NONE}");
            }
            events
                .iter()
                .map(|e| {
                    format!(
                        "{} {}",
                        emit_triggers(std::slice::from_ref(e)),
                        emit_anatomies(&e.anatomies)
                    )
                })
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VanillaOutput {
    Triggers(Vec<Trigger>),
    Anatomies(Vec<AnatomyEntity>),
    Events(Vec<Event>),
}

impl VanillaOutput {
    pub fn into_events(self) -> Vec<Event> {
        match self {
            VanillaOutput::Events(e) => e,
            VanillaOutput::Triggers(ts) => ts
                .into_iter()
                .map(|trigger| Event {
                    trigger,
                    anatomies: Vec::new(),
                })
                .collect(),
            VanillaOutput::Anatomies(_) => Vec::new(),
        }
    }
}

/// One `text [ label ]` or bare `text` item of a comma-separated list.
struct Item<'a> {
    text: &'a str,
    label: Option<&'a str>,
}

fn split_items<'a>(content: &'a str, warnings: &mut Vec<ParseWarning>) -> Vec<Item<'a>> {
    let mut items = Vec::new();
    if is_none_answer(content) {
        return items;
    }
    let mut rest = content;
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        if rest.is_empty() {
            break;
        }
        let bracket = rest.find('[');
        let comma = rest.find(',');
        match bracket {
            Some(b) if comma.is_none_or(|c| b < c) => {
                let Some(close) = rest[b..].find(']').map(|c| b + c) else {
                    warnings.push(ParseWarning::new(WarningKind::MalformedFragment, rest.trim()));
                    break;
                };
                let text = rest[..b].trim();
                let label = rest[b + 1..close].trim();
                if text.is_empty() {
                    warnings.push(ParseWarning::new(
                        WarningKind::MalformedFragment,
                        rest[..=close].trim(),
                    ));
                } else {
                    items.push(Item {
                        text,
                        label: Some(label),
                    });
                }
                rest = &rest[close + 1..];
            }
            _ => {
                let end = comma.unwrap_or(rest.len());
                let text = rest[..end].trim();
                if !text.is_empty() && text != NONE {
                    items.push(Item { text, label: None });
                }
                rest = &rest[end..];
            }
        }
    }
    items
}

fn parse_trigger_items(content: &str, warnings: &mut Vec<ParseWarning>) -> Vec<Trigger> {
    split_items(content, warnings)
        .into_iter()
        .filter_map(|item| {
            let Some(label) = item.label else {
                warnings.push(ParseWarning::new(WarningKind::UnparseableLabel, item.text));
                return None;
            };
            match label.parse::<TriggerType>() {
                Ok(kind) => Some(Trigger {
                    text: item.text.to_string(),
                    span: None,
                    kind,
                }),
                Err(_) => {
                    warnings.push(ParseWarning::new(
                        WarningKind::UnparseableLabel,
                        format!("{} [ {} ]", item.text, label),
                    ));
                    None
                }
            }
        })
        .collect()
}

fn parse_anatomy_items(
    content: &str,
    ontology: &Ontology,
    warnings: &mut Vec<ParseWarning>,
) -> Vec<AnatomyEntity> {
    split_items(content, warnings)
        .into_iter()
        .filter_map(|item| {
            let label = match item.label {
                None => None,
                Some(l) => match ontology.parse_label(l) {
                    Ok(label) => Some(label),
                    Err(_) => {
                        warnings.push(ParseWarning::new(
                            WarningKind::UnparseableLabel,
                            format!("{} [ {} ]", item.text, l),
                        ));
                        return None;
                    }
                },
            };
            Some(AnatomyEntity {
                text: item.text.to_string(),
                span: None,
                label,
            })
        })
        .collect()
}

enum Section<'a> {
    Trigger(&'a str),
    Anatomies(&'a str),
}

fn sections<'a>(text: &'a str, warnings: &mut Vec<ParseWarning>) -> Vec<Section<'a>> {
    let mut marks: Vec<(usize, bool)> = marker_positions(text, TRIGGER)
        .into_iter()
        .map(|i| (i, true))
        .chain(marker_positions(text, ANATOMIES).into_iter().map(|i| (i, false)))
        .collect();
    marks.sort_unstable();
    let head = &text[..marks.first().map_or(text.len(), |m| m.0)];
    if text.trim().is_empty() {
        warnings.push(ParseWarning::new(WarningKind::EmptyOutput, ""));
    } else if !is_none_answer(head) {
        warnings.push(ParseWarning::new(WarningKind::StrayText, head.trim()));
    }
    marks
        .iter()
        .enumerate()
        .map(|(n, &(pos, is_trigger))| {
            let marker_len = if is_trigger { TRIGGER.len() } else { ANATOMIES.len() };
            let end = marks.get(n + 1).map_or(text.len(), |m| m.0);
            let body = &text[pos + marker_len..end];
            if is_trigger {
                Section::Trigger(body)
            } else {
                Section::Anatomies(body)
            }
        })
        .collect()
}

/// Parses vanilla output into span-less entities.
pub fn parse_vanilla_text(step: StepKind, text: &str, ontology: &Ontology) -> Parsed<VanillaOutput> {
    let mut warnings = Vec::new();
    let secs = sections(text, &mut warnings);
    let value = match step {
        StepKind::TriggerStep | StepKind::AuxTriggerClassify => {
            let mut triggers = Vec::new();
            for s in &secs {
                match s {
                    Section::Trigger(body) => triggers.extend(parse_trigger_items(body, &mut warnings)),
                    Section::Anatomies(body) => warnings.push(ParseWarning::new(
                        WarningKind::StrayText,
                        format!("{ANATOMIES}{body}").trim(),
                    )),
                }
            }
            VanillaOutput::Triggers(triggers)
        }
        StepKind::AnatomyStep | StepKind::NormalizeStep | StepKind::AuxAnatomySpan => {
            let mut anatomies = Vec::new();
            for s in &secs {
                match s {
                    Section::Anatomies(body) => {
                        anatomies.extend(parse_anatomy_items(body, ontology, &mut warnings))
                    }
                    Section::Trigger(body) => warnings.push(ParseWarning::new(
                        WarningKind::StrayText,
                        format!("{TRIGGER}{body}").trim(),
                    )),
                }
            }
            VanillaOutput::Anatomies(anatomies)
        }
        StepKind::OneStepVanilla | StepKind::OneStepBlocks => {
            let mut events: Vec<Event> = Vec::new();
            for s in &secs {
                match s {
                    Section::Trigger(body) => events.extend(
                        parse_trigger_items(body, &mut warnings)
                            .into_iter()
                            .map(|trigger| Event {
                                trigger,
                                anatomies: Vec::new(),
                            }),
                    ),
                    Section::Anatomies(body) => {
                        let anatomies = parse_anatomy_items(body, ontology, &mut warnings);
                        match events.last_mut() {
                            Some(e) => e.anatomies.extend(anatomies),
                            None if anatomies.is_empty() => {}
                            None => warnings.push(ParseWarning::new(
                                WarningKind::StrayText,
                                format!("{ANATOMIES}{body}").trim(),
                            )),
                        }
                    }
                }
            }
            VanillaOutput::Events(events)
        }
    };
    Parsed { value, warnings }
}

/// Parses vanilla output and aligns spans in `sentence`. Standalone anatomy
/// lists are aligned without an anchor.
pub fn parse_vanilla(
    step: StepKind,
    text: &str,
    sentence: &str,
    ontology: &Ontology,
) -> Parsed<VanillaOutput> {
    let Parsed { value, warnings } = parse_vanilla_text(step, text, ontology);
    let value = match value {
        VanillaOutput::Triggers(ts) => VanillaOutput::Triggers(
            ts.into_iter()
                .map(|mut t| {
                    t.span = align_term(sentence, &t.text, None);
                    t
                })
                .collect(),
        ),
        VanillaOutput::Anatomies(anats) => VanillaOutput::Anatomies(
            anats
                .into_iter()
                .map(|mut a| {
                    a.span = align_term(sentence, &a.text, None);
                    a
                })
                .collect(),
        ),
        VanillaOutput::Events(events) => VanillaOutput::Events(attach_spans(sentence, &events)),
    };
    Parsed { value, warnings }
}

/// Anatomy answers in either grammar: a vanilla `anatomies:` list, or block
/// output whose `classification` blocks carry labels.
pub fn parse_anatomy_answers(text: &str, ontology: &Ontology) -> Parsed<Vec<AnatomyEntity>> {
    if !marker_positions(text, "state:").is_empty() {
        return super::blocks::parse_anatomy_blocks(text, ontology);
    }
    let Parsed { value, warnings } = parse_vanilla_text(StepKind::NormalizeStep, text, ontology);
    match value {
        VanillaOutput::Anatomies(a) => Parsed { value: a, warnings },
        _ => unreachable!("normalize step yields anatomies"),
    }
}
