use thiserror::Error;

use super::StepKind;
use crate::context::ContextBundle;
use crate::event::{Sentence, SentenceKey, Span};
use crate::text::token_spans;

/// Tokens kept on each side of the focus term.
pub const FOCUS_WINDOW_RADIUS: usize = 3;

pub const MAX_INPUT_TOKENS: usize = 768;
pub const MAX_INPUT_TOKENS_WITH_CONTEXT: usize = 1536;
pub const MAX_OUTPUT_TOKENS: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("{0:?} prompts need a focus term")]
    MissingFocus(StepKind),
}

/// The queried trigger or anatomy term and its surrounding window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Focus {
    pub term: String,
    pub span: Option<Span>,
    pub window: String,
}

impl Focus {
    /// Without a span the window degrades to the term itself.
    pub fn new(sentence: &str, term: &str, span: Option<Span>) -> Self {
        let window = match span {
            Some(sp) => focus_window(sentence, sp),
            None => term.to_string(),
        };
        Focus {
            term: term.to_string(),
            span,
            window,
        }
    }
}

/// Whitespace tokens touched by `term_span` plus up to three tokens either side.
pub fn focus_window(sentence: &str, term_span: Span) -> String {
    let tokens = token_spans(sentence);
    let hit: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.overlaps(&term_span))
        .map(|(i, _)| i)
        .collect();
    let (Some(&first), Some(&last)) = (hit.first(), hit.last()) else {
        return String::new();
    };
    let lo = first.saturating_sub(FOCUS_WINDOW_RADIUS);
    let hi = (last + FOCUS_WINDOW_RADIUS).min(tokens.len() - 1);
    let chars: Vec<char> = sentence.chars().collect();
    tokens[lo..=hi]
        .iter()
        .map(|t| chars[t.start..t.end].iter().collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptRecord {
    pub step: StepKind,
    pub key: SentenceKey,
    pub text: String,
    pub focus: Option<Focus>,
    pub context: Option<ContextBundle>,
    /// Length limits of the original setup, recorded but not enforced.
    pub max_input_tokens: usize,
    pub max_output_tokens: usize,
}

fn question(step: StepKind, focus: Option<&Focus>) -> Result<String, PromptError> {
    let focus = match (step.needs_focus(), focus) {
        (true, None) => return Err(PromptError::MissingFocus(step)),
        (_, f) => f,
    };
    let term = focus.map(|f| f.term.as_str()).unwrap_or_default();
    let window = focus.map(|f| f.window.as_str()).unwrap_or_default();
    Ok(match step {
        StepKind::TriggerStep => "Question: What are medical findings in this sentence?".into(),
        StepKind::AnatomyStep => format!(
            "Consider the medical finding \"{term}\" in the span \"{window}\", Question: What anatomy it occurs in?  Where is it located?"
        ),
        StepKind::NormalizeStep => format!(
            "Consider the anatomy \"{term}\" in the span \"{window}\", which anatomy category it belongs to among listed options?"
        ),
        StepKind::OneStepVanilla | StepKind::OneStepBlocks => {
            "Question: What are medical findings in this sentence? What anatomy they occur in?  which anatomy category they belong to among listed options?".into()
        }
        StepKind::AuxTriggerClassify => format!(
            "Consider the medical finding \"{term}\", Question: What is the type of this medical finding?"
        ),
        StepKind::AuxAnatomySpan => format!(
            "Consider the medical finding \"{term}\" in the span \"{window}\", Question: Please identify terms that describe the finding's anatomy locations."
        ),
    })
}

/// `[prepended] <sentence> <question> structured knowledge: [appended] <ontology>`
pub fn build_prompt(
    step: StepKind,
    sentence: Sentence<'_>,
    ontology_text: &str,
    contexts: Option<&ContextBundle>,
    focus: Option<Focus>,
) -> Result<PromptRecord, PromptError> {
    let question = question(step, focus.as_ref())?;
    let mut parts: Vec<&str> = Vec::new();
    if let Some(ctx) = contexts {
        parts.extend(ctx.prepended());
    }
    parts.push(sentence.text.trim());
    parts.push(&question);
    parts.push("structured knowledge:");
    if let Some(ctx) = contexts {
        parts.extend(ctx.appended());
    }
    parts.push(ontology_text);
    let text = parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let has_context = contexts.is_some_and(|c| !c.is_empty());
    Ok(PromptRecord {
        step,
        key: sentence.key(),
        text,
        focus,
        context: contexts.cloned(),
        max_input_tokens: if has_context {
            MAX_INPUT_TOKENS_WITH_CONTEXT
        } else {
            MAX_INPUT_TOKENS
        },
        max_output_tokens: MAX_OUTPUT_TOKENS,
    })
}
