//! Prompt rendering and the two model output grammars.
//!
//! * vanilla: `trigger: density [ Lesion ] anatomies: soft tissue [ Hepato-Biliary | Liver ]`
//! * blocks: `state: <subtask> answer: <payload>` repeated, one block per subtask.
//!
//! Parsers never fail. Malformed fragments are dropped and reported as
//! [`ParseWarning`]s next to whatever could be recovered.

mod blocks;
mod prompt;
mod targets;
mod training;
mod vanilla;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::RenderKind;

pub use blocks::{emit_blocks, parse_blocks, parse_blocks_text, BlockState};
pub use prompt::{build_prompt, focus_window, Focus, PromptError, PromptRecord};
pub use targets::{find_focus_anatomy, find_focus_event, target_for};
pub use training::{emit_training_pairs, TrainingOptions, TrainingRecord, TrainingTask};
pub use vanilla::{
    emit_anatomies, emit_triggers, emit_vanilla, parse_anatomy_answers, parse_vanilla,
    parse_vanilla_text, VanillaOutput,
};

/// Literal emitted for an empty answer.
pub const NONE: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    TriggerStep,
    AnatomyStep,
    NormalizeStep,
    OneStepVanilla,
    OneStepBlocks,
    AuxTriggerClassify,
    AuxAnatomySpan,
}

impl StepKind {
    pub fn needs_focus(self) -> bool {
        matches!(
            self,
            StepKind::AnatomyStep
                | StepKind::NormalizeStep
                | StepKind::AuxTriggerClassify
                | StepKind::AuxAnatomySpan
        )
    }

    /// Ontology rendering the pipelines pair with this step.
    pub fn ontology_kind(self) -> RenderKind {
        match self {
            StepKind::TriggerStep => RenderKind::Trigger,
            StepKind::AnatomyStep | StepKind::NormalizeStep => RenderKind::Anatomy,
            StepKind::OneStepVanilla
            | StepKind::OneStepBlocks
            | StepKind::AuxTriggerClassify
            | StepKind::AuxAnatomySpan => RenderKind::Joint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Vanilla,
    Blocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarningKind {
    EmptyOutput,
    UnparseableLabel,
    MalformedFragment,
    StrayText,
    UnknownState,
    MalformedAnswer,
    UnmatchedBlock,
    NoBlocksFound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub kind: WarningKind,
    pub fragment: String,
}

impl ParseWarning {
    pub(crate) fn new(kind: WarningKind, fragment: impl Into<String>) -> Self {
        ParseWarning {
            kind,
            fragment: fragment.into(),
        }
    }
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: `{}`", self.kind, self.fragment)
    }
}

/// A parse result with the warnings collected on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseWarning>,
}

/// Byte offsets of `marker` occurrences that start the text or follow whitespace.
pub(crate) fn marker_positions(text: &str, marker: &str) -> Vec<usize> {
    text.match_indices(marker)
        .map(|(i, _)| i)
        .filter(|&i| i == 0 || text[..i].ends_with(char::is_whitespace))
        .collect()
}

pub(crate) fn is_none_answer(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s == NONE
}
