//! Extraction flows over a pluggable text-to-text backend.
//!
//! | kind | passes per sentence |
//! |------|---------------------|
//! | three-step vanilla | 1 + triggers + anatomies |
//! | two-step vanilla | 1 + triggers |
//! | one-step (vanilla or blocks) | 1 |
//! | one-step blocks + context normalization | 1 + anatomies |
//!
//! Sentences run independently (optionally in parallel); the passes of one
//! sentence run in order because later prompts depend on earlier answers.

mod backend;
mod cost;
mod remote;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, GoldReplayBackend, ModelBackend, NoiseConfig, NoisyReplayBackend};
pub use cost::{cost_report, CostReport, PassLog, Tokenizer, WhitespaceTokenizer};
pub use remote::{RemoteBackend, API_KEY_ENV};

use crate::align::attach_spans;
use crate::context::{gather, ContextBundle, ContextError, ContextKind};
use crate::event::{AnatomyEntity, Annotations, Corpus, Document, Event, Sentence};
use crate::ontology::{Ontology, RenderKind};
use crate::par::{self, Parallelism};
use crate::retrieval::SearchIndex;
use crate::textio::{
    build_prompt, parse_anatomy_answers, parse_blocks, parse_vanilla, parse_vanilla_text, Focus,
    ParseWarning, StepKind, VanillaOutput,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    ThreeStepVanilla,
    TwoStepVanilla,
    OneStepVanilla,
    OneStepBlocks,
    OneStepBlocksContextNorm(ContextKind),
}

impl PipelineKind {
    pub const BASIC: [PipelineKind; 4] = [
        PipelineKind::ThreeStepVanilla,
        PipelineKind::TwoStepVanilla,
        PipelineKind::OneStepVanilla,
        PipelineKind::OneStepBlocks,
    ];

    pub fn context(self) -> Option<ContextKind> {
        match self {
            PipelineKind::OneStepBlocksContextNorm(k) => Some(k),
            _ => None,
        }
    }

    pub fn with_context(self, context: Option<ContextKind>) -> Result<Self, PipelineError> {
        match (self, context) {
            (k, None) => Ok(k),
            (PipelineKind::OneStepBlocks | PipelineKind::OneStepBlocksContextNorm(_), Some(c)) => {
                Ok(PipelineKind::OneStepBlocksContextNorm(c))
            }
            (k, Some(_)) => Err(PipelineError::ContextUnsupported(k)),
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineKind::ThreeStepVanilla => f.write_str("three-step"),
            PipelineKind::TwoStepVanilla => f.write_str("two-step"),
            PipelineKind::OneStepVanilla => f.write_str("one-step-vanilla"),
            PipelineKind::OneStepBlocks => f.write_str("one-step-blocks"),
            PipelineKind::OneStepBlocksContextNorm(k) => write!(f, "one-step-blocks+{k:?}"),
        }
    }
}

impl FromStr for PipelineKind {
    type Err = PipelineError;

    /// Accepts the names printed by `Display`, without a context suffix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "three-step" | "three-step-vanilla" | "3-step" => Ok(PipelineKind::ThreeStepVanilla),
            "two-step" | "two-step-vanilla" | "2-step" => Ok(PipelineKind::TwoStepVanilla),
            "one-step-vanilla" | "1-step-vanilla" => Ok(PipelineKind::OneStepVanilla),
            "one-step-blocks" | "1-step-blocks" => Ok(PipelineKind::OneStepBlocks),
            _ => Err(PipelineError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("pipeline {0} takes no context")]
    ContextUnsupported(PipelineKind),
    #[error("unknown pipeline kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig<'a> {
    pub ontology: &'a Ontology,
    pub retriever: Option<&'a SearchIndex>,
    pub parallelism: Parallelism,
}

impl Default for PipelineConfig<'_> {
    fn default() -> Self {
        PipelineConfig {
            ontology: Ontology::builtin(),
            retriever: None,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutput {
    /// One entry per corpus sentence, possibly empty.
    pub predictions: Annotations,
    /// Sorted by sentence key.
    pub logs: Vec<PassLog>,
}

impl PipelineOutput {
    pub fn cost(&self) -> CostReport {
        cost_report(&self.logs)
    }
}

struct Renderings {
    trigger: String,
    anatomy: String,
    joint: String,
}

/// Runs `kind` over every sentence of `corpus`.
///
/// Backend failures never abort the run: the affected sentence gets no events
/// and its log records the error.
pub fn run(
    kind: PipelineKind,
    corpus: &Corpus,
    backend: &dyn ModelBackend,
    tokenizer: &dyn Tokenizer,
    config: &PipelineConfig<'_>,
) -> Result<PipelineOutput, PipelineError> {
    if let Some(ctx) = kind.context() {
        if ctx.needs_retriever() && config.retriever.is_none() {
            return Err(ContextError::RetrieverMissing(ctx).into());
        }
    }
    let renderings = Renderings {
        trigger: config.ontology.render(RenderKind::Trigger),
        anatomy: config.ontology.render(RenderKind::Anatomy),
        joint: config.ontology.render(RenderKind::Joint),
    };
    let work: Vec<(&Document, usize)> = corpus
        .documents
        .iter()
        .flat_map(|d| (0..d.sentences.len()).map(move |i| (d, i)))
        .collect();
    let results = par::map(&work, config.parallelism, |&(doc, idx)| {
        let mut runner = SentenceRun {
            doc,
            sentence: doc.sentence(idx).expect("index in range"),
            backend,
            tokenizer,
            config,
            renderings: &renderings,
            log: PassLog::new(crate::event::SentenceKey::new(&doc.id, idx)),
        };
        let events = match runner.run(kind) {
            Ok(events) => events,
            Err(e) => {
                runner.log.error = Some(e.to_string());
                Vec::new()
            }
        };
        (runner.log, events)
    });

    let mut merged: BTreeMap<_, _> = BTreeMap::new();
    for (log, events) in results {
        merged.insert(log.key.clone(), (log, events));
    }
    let mut out = PipelineOutput::default();
    for (key, (log, events)) in merged {
        out.predictions.insert(key, events);
        out.logs.push(log);
    }
    Ok(out)
}

#[derive(Debug, Error)]
enum SentenceError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error("{0}")]
    Prompt(String),
}

struct SentenceRun<'a> {
    doc: &'a Document,
    sentence: Sentence<'a>,
    backend: &'a dyn ModelBackend,
    tokenizer: &'a dyn Tokenizer,
    config: &'a PipelineConfig<'a>,
    renderings: &'a Renderings,
    log: PassLog,
}

impl SentenceRun<'_> {
    fn pass(
        &mut self,
        step: StepKind,
        ontology_text: &str,
        context: Option<&ContextBundle>,
        focus: Option<Focus>,
    ) -> Result<String, SentenceError> {
        let prompt = build_prompt(step, self.sentence, ontology_text, context, focus)
            .map_err(|e| SentenceError::Prompt(e.to_string()))?;
        self.log.passes += 1;
        self.log.steps.push(step);
        self.log.input_tokens += self.tokenizer.count(&prompt.text);
        let out = self.backend.generate(&prompt, prompt.max_output_tokens)?;
        self.log.output_tokens += self.tokenizer.count(&out);
        Ok(out)
    }

    fn warn(&mut self, warnings: Vec<ParseWarning>) {
        self.log.warnings.extend(warnings.iter().map(ToString::to_string));
    }

    fn run(&mut self, kind: PipelineKind) -> Result<Vec<Event>, SentenceError> {
        match kind {
            PipelineKind::ThreeStepVanilla => self.multi_step(true),
            PipelineKind::TwoStepVanilla => self.multi_step(false),
            PipelineKind::OneStepVanilla => {
                let out = self.pass(StepKind::OneStepVanilla, &self.renderings.joint, None, None)?;
                let parsed = parse_vanilla(StepKind::OneStepVanilla, &out, self.sentence.text, self.config.ontology);
                self.warn(parsed.warnings);
                Ok(parsed.value.into_events())
            }
            PipelineKind::OneStepBlocks => self.one_step_blocks(),
            PipelineKind::OneStepBlocksContextNorm(ctx) => {
                let mut events = self.one_step_blocks()?;
                let bundle = gather(self.doc, self.sentence.index, ctx, self.config.retriever)?;
                for event in &mut events {
                    for anatomy in &mut event.anatomies {
                        if let Some(label) = self.normalize(anatomy, Some(&bundle))? {
                            anatomy.label = Some(label);
                        }
                    }
                }
                Ok(events)
            }
        }
    }

    fn one_step_blocks(&mut self) -> Result<Vec<Event>, SentenceError> {
        let out = self.pass(StepKind::OneStepBlocks, &self.renderings.joint, None, None)?;
        let parsed = parse_blocks(&out, self.sentence.text, self.config.ontology);
        self.warn(parsed.warnings);
        Ok(parsed.value)
    }

    /// Trigger pass, one anatomy pass per trigger, and with `normalize` one
    /// normalization pass per anatomy in place of the anatomy pass labels.
    fn multi_step(&mut self, normalize: bool) -> Result<Vec<Event>, SentenceError> {
        let out = self.pass(StepKind::TriggerStep, &self.renderings.trigger, None, None)?;
        let parsed = parse_vanilla(StepKind::TriggerStep, &out, self.sentence.text, self.config.ontology);
        self.warn(parsed.warnings);
        let mut events = parsed.value.into_events();
        for event in &mut events {
            let focus = Focus::new(self.sentence.text, &event.trigger.text, event.trigger.span);
            let out = self.pass(StepKind::AnatomyStep, &self.renderings.anatomy, None, Some(focus))?;
            let parsed = parse_vanilla_text(StepKind::AnatomyStep, &out, self.config.ontology);
            self.warn(parsed.warnings);
            let VanillaOutput::Anatomies(anatomies) = parsed.value else {
                unreachable!("anatomy step yields anatomies")
            };
            event.anatomies = anatomies;
            *event = attach_spans(self.sentence.text, std::slice::from_ref(event)).remove(0);
            if normalize {
                for anatomy in &mut event.anatomies {
                    anatomy.label = None;
                    anatomy.label = self.normalize(anatomy, None)?;
                }
            }
        }
        Ok(events)
    }

    fn normalize(
        &mut self,
        anatomy: &AnatomyEntity,
        context: Option<&ContextBundle>,
    ) -> Result<Option<crate::ontology::AnatomyLabel>, SentenceError> {
        let focus = Focus::new(self.sentence.text, &anatomy.text, anatomy.span);
        let out = self.pass(StepKind::NormalizeStep, &self.renderings.anatomy, context, Some(focus))?;
        let parsed = parse_anatomy_answers(&out, self.config.ontology);
        self.warn(parsed.warnings);
        let labeled: Vec<AnatomyEntity> =
            parsed.value.into_iter().filter(|a| a.label.is_some()).collect();
        let pick = labeled
            .iter()
            .find(|a| a.text == anatomy.text)
            .or_else(|| labeled.first())
            .and_then(|a| a.label.clone());
        Ok(pick)
    }
}
