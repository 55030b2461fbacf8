use super::blocks::{emit_blocks, join_texts, BlockState};
use super::prompt::Focus;
use super::vanilla::{emit_anatomies, emit_triggers, emit_vanilla};
use super::{OutputFormat, StepKind};
use crate::event::{AnatomyEntity, Event};

/// The gold event a trigger-focused prompt asks about: exact span match first,
/// then the first event with the same trigger text.
pub fn find_focus_event<'a>(events: &'a [Event], focus: &Focus) -> Option<&'a Event> {
    focus
        .span
        .and_then(|sp| {
            events
                .iter()
                .find(|e| e.trigger.span == Some(sp) && e.trigger.text == focus.term)
        })
        .or_else(|| events.iter().find(|e| e.trigger.text == focus.term))
}

/// The gold anatomy an anatomy-focused prompt asks about, resolved like
/// [`find_focus_event`].
pub fn find_focus_anatomy<'a>(events: &'a [Event], focus: &Focus) -> Option<&'a AnatomyEntity> {
    let all = || events.iter().flat_map(|e| &e.anatomies);
    focus
        .span
        .and_then(|sp| all().find(|a| a.span == Some(sp) && a.text == focus.term))
        .or_else(|| all().find(|a| a.text == focus.term))
}

/// Target string for `step` given the gold events of one sentence.
///
/// Returns `None` when a focused step names an entity that is not among the
/// events. `format` selects the grammar for the per-entity steps; the one-step
/// kinds always use their own grammar and the auxiliary kinds always use blocks.
pub fn target_for(
    step: StepKind,
    events: &[Event],
    focus: Option<&Focus>,
    format: OutputFormat,
) -> Option<String> {
    let blocks = format == OutputFormat::Blocks;
    Some(match step {
        StepKind::OneStepVanilla => emit_vanilla(step, events),
        StepKind::OneStepBlocks => emit_blocks(events),
        StepKind::TriggerStep if blocks => BlockState::TriggerDetection
            .block(&join_texts(events.iter().map(|e| e.trigger.text.as_str()))),
        StepKind::TriggerStep => emit_triggers(events),
        StepKind::AuxTriggerClassify => {
            let e = find_focus_event(events, focus?)?;
            BlockState::TriggerClassification
                .block(&format!("{} [ {} ]", e.trigger.text, e.trigger.kind))
        }
        StepKind::AuxAnatomySpan => {
            let e = find_focus_event(events, focus?)?;
            BlockState::SpanDetection.block(&join_texts(e.anatomies.iter().map(|a| a.text.as_str())))
        }
        StepKind::AnatomyStep => {
            let e = find_focus_event(events, focus?)?;
            if blocks {
                let mut out = vec![BlockState::SpanDetection
                    .block(&join_texts(e.anatomies.iter().map(|a| a.text.as_str())))];
                out.extend(e.anatomies.iter().filter_map(|a| {
                    a.label.as_ref().map(|l| {
                        BlockState::Classification.block(&format!("{} [ {} ]", a.text, l))
                    })
                }));
                out.join(" ")
            } else {
                emit_anatomies(&e.anatomies)
            }
        }
        StepKind::NormalizeStep => {
            let a = find_focus_anatomy(events, focus?)?;
            match (&a.label, blocks) {
                (Some(l), true) => BlockState::Classification.block(&format!("{} [ {} ]", a.text, l)),
                _ => emit_anatomies(std::iter::once(a)),
            }
        }
    })
}
