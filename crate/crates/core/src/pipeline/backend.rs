use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::event::{Annotations, Event, SentenceKey};
use crate::ontology::{AnatomyLabel, Ontology, TriggerType};
use crate::textio::{target_for, OutputFormat, PromptRecord};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("retries exhausted after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("endpoint answered with HTTP {0}")]
    Http(u16),
    #[error("no target for {0}")]
    UnknownPrompt(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
}

/// A text-to-text model. Implementations must tolerate concurrent calls.
///
/// The full [`PromptRecord`] is passed so replay backends can read the sentence
/// key and focus; model-backed implementations only look at `prompt.text`.
pub trait ModelBackend: Send + Sync {
    fn generate(&self, prompt: &PromptRecord, max_tokens: usize) -> Result<String, BackendError>;
}

impl<B: ModelBackend + ?Sized> ModelBackend for &B {
    fn generate(&self, prompt: &PromptRecord, max_tokens: usize) -> Result<String, BackendError> {
        (**self).generate(prompt, max_tokens)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for Box<B> {
    fn generate(&self, prompt: &PromptRecord, max_tokens: usize) -> Result<String, BackendError> {
        (**self).generate(prompt, max_tokens)
    }
}

/// Answers every prompt with the target string derived from gold events.
///
/// Per-entity steps use `format`; one-step prompts always answer in the
/// grammar their step names. Sentences absent from the annotations have no
/// events.
#[derive(Debug, Clone)]
pub struct GoldReplayBackend {
    gold: Annotations,
    format: OutputFormat,
}

impl GoldReplayBackend {
    pub fn new(gold: Annotations, format: OutputFormat) -> Self {
        GoldReplayBackend { gold, format }
    }

    pub fn annotations(&self) -> &Annotations {
        &self.gold
    }

    pub fn format(&self) -> OutputFormat {
        self.format
    }
}

impl ModelBackend for GoldReplayBackend {
    fn generate(&self, prompt: &PromptRecord, _max_tokens: usize) -> Result<String, BackendError> {
        let events = self.gold.get(&prompt.key).map(Vec::as_slice).unwrap_or_default();
        target_for(prompt.step, events, prompt.focus.as_ref(), self.format).ok_or_else(|| {
            let term = prompt.focus.as_ref().map(|f| f.term.as_str()).unwrap_or_default();
            BackendError::UnknownPrompt(format!("{:?} on {} about `{term}`", prompt.step, prompt.key))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Chance of removing each event, then each remaining anatomy.
    pub drop_prob: f64,
    /// Chance of replacing each trigger type and anatomy label with a different one.
    pub flip_prob: f64,
}

/// Gold replay over a perturbed copy of the annotations. The perturbation is
/// fixed at construction and seeded per sentence, so a sentence's noise does
/// not depend on which other sentences are present.
#[derive(Debug, Clone)]
pub struct NoisyReplayBackend {
    inner: GoldReplayBackend,
}

impl NoisyReplayBackend {
    pub fn new(
        gold: &Annotations,
        format: OutputFormat,
        ontology: &Ontology,
        noise: NoiseConfig,
    ) -> Result<Self, BackendError> {
        for (name, p) in [("drop_prob", noise.drop_prob), ("flip_prob", noise.flip_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(BackendError::InvalidConfig(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        let labels = ontology.labels();
        let noisy = gold
            .iter()
            .map(|(key, events)| {
                let mut rng = ChaCha8Rng::seed_from_u64(noise.seed ^ key_hash(key));
                (key.clone(), perturb(events, &mut rng, &noise, &labels))
            })
            .collect();
        Ok(NoisyReplayBackend {
            inner: GoldReplayBackend::new(noisy, format),
        })
    }

    pub fn annotations(&self) -> &Annotations {
        self.inner.annotations()
    }
}

impl ModelBackend for NoisyReplayBackend {
    fn generate(&self, prompt: &PromptRecord, max_tokens: usize) -> Result<String, BackendError> {
        self.inner.generate(prompt, max_tokens)
    }
}

// FNV-1a over the key's display form.
fn key_hash(key: &SentenceKey) -> u64 {
    key.to_string().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn perturb(events: &[Event], rng: &mut ChaCha8Rng, noise: &NoiseConfig, labels: &[AnatomyLabel]) -> Vec<Event> {
    let mut out = Vec::new();
    for event in events {
        if rng.random_bool(noise.drop_prob) {
            continue;
        }
        let mut event = event.clone();
        if rng.random_bool(noise.flip_prob) {
            let others: Vec<TriggerType> = TriggerType::ALL
                .into_iter()
                .filter(|t| *t != event.trigger.kind)
                .collect();
            event.trigger.kind = *others.choose(rng).expect("three trigger types");
        }
        event.anatomies.retain(|_| !rng.random_bool(noise.drop_prob));
        for a in &mut event.anatomies {
            if a.label.is_some() && rng.random_bool(noise.flip_prob) {
                let others: Vec<&AnatomyLabel> =
                    labels.iter().filter(|l| Some(*l) != a.label.as_ref()).collect();
                if let Some(l) = others.choose(rng) {
                    a.label = Some((*l).clone());
                }
            }
        }
        out.push(event);
    }
    out
}
