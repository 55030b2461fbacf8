use serde::{Deserialize, Serialize};

use super::prompt::{build_prompt, Focus};
use super::targets::target_for;
use super::{OutputFormat, StepKind};
use crate::event::{Annotations, Corpus, Sentence};
use crate::ontology::{Ontology, RenderKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingTask {
    OneStep,
    TriggerDetection,
    TriggerClassification,
    AnatomyJoint,
    AnatomySpan,
    AnatomyNormalization,
}

/// One line of the training export. Context bundles are never part of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub prompt: String,
    pub target: String,
    pub task: TrainingTask,
    pub doc_id: String,
    pub sent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingOptions {
    pub format: OutputFormat,
    /// Trigger detection, trigger classification, joint anatomy span and
    /// normalization, and anatomy normalization records.
    pub include_aux: bool,
    /// Adds the standalone anatomy span detection task; only honored with `include_aux`.
    pub include_anatomy_span: bool,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions {
            format: OutputFormat::Blocks,
            include_aux: true,
            include_anatomy_span: false,
        }
    }
}

/// Prompt/target pairs for an external trainer. Every sentence yields one
/// full-task record; auxiliary records use the block grammar and the joint
/// ontology.
pub fn emit_training_pairs(
    corpus: &Corpus,
    gold: &Annotations,
    ontology: &Ontology,
    options: TrainingOptions,
) -> Vec<TrainingRecord> {
    let joint = ontology.render(RenderKind::Joint);
    let one_step = match options.format {
        OutputFormat::Vanilla => StepKind::OneStepVanilla,
        OutputFormat::Blocks => StepKind::OneStepBlocks,
    };
    let mut out = Vec::new();
    for sentence in corpus.sentences() {
        let events = gold.get(&sentence.key()).map(Vec::as_slice).unwrap_or_default();
        let mut push = |task: TrainingTask, step: StepKind, focus: Option<Focus>, fmt: OutputFormat| {
            let target = target_for(step, events, focus.as_ref(), fmt);
            let prompt = build_prompt(step, sentence, &joint, None, focus);
            if let (Some(target), Ok(prompt)) = (target, prompt) {
                out.push(record(sentence, prompt.text, target, task));
            }
        };
        push(TrainingTask::OneStep, one_step, None, options.format);
        if !options.include_aux {
            continue;
        }
        push(
            TrainingTask::TriggerDetection,
            StepKind::TriggerStep,
            None,
            OutputFormat::Blocks,
        );
        for e in events {
            let focus = Focus::new(sentence.text, &e.trigger.text, e.trigger.span);
            push(
                TrainingTask::TriggerClassification,
                StepKind::AuxTriggerClassify,
                Some(focus.clone()),
                OutputFormat::Blocks,
            );
            push(
                TrainingTask::AnatomyJoint,
                StepKind::AnatomyStep,
                Some(focus.clone()),
                OutputFormat::Blocks,
            );
            if options.include_anatomy_span {
                push(
                    TrainingTask::AnatomySpan,
                    StepKind::AuxAnatomySpan,
                    Some(focus),
                    OutputFormat::Blocks,
                );
            }
        }
        for a in events.iter().flat_map(|e| &e.anatomies) {
            push(
                TrainingTask::AnatomyNormalization,
                StepKind::NormalizeStep,
                Some(Focus::new(sentence.text, &a.text, a.span)),
                OutputFormat::Blocks,
            );
        }
    }
    out
}

fn record(sentence: Sentence<'_>, prompt: String, target: String, task: TrainingTask) -> TrainingRecord {
    TrainingRecord {
        prompt,
        target,
        task,
        doc_id: sentence.doc_id.to_string(),
        sent: sentence.index,
    }
}
