//! Radiology event extraction with generative models.
//!
//! An event is a finding trigger (Indication, Lesion or Medical_Problem) with
//! the anatomy spans it is located in, each normalized to a two-level anatomy
//! label. The crate builds prompts, parses model output back into events,
//! drives multi-pass or single-pass pipelines against a [`ModelBackend`],
//! and scores predictions at trigger and anatomy levels.
//!
//! Batch work goes through [`par`], which uses rayon when the `parallel`
//! feature is on (the default) and plain iteration otherwise.

pub mod align;
pub mod context;
pub mod eval;
pub mod event;
pub mod io;
pub mod ontology;
pub mod par;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;
pub mod text;
pub mod textio;

pub use context::{ContextBundle, ContextKind};
pub use eval::{evaluate, EvalReport, Level};
pub use event::{AnatomyEntity, Annotations, Corpus, Document, Event, Sentence, SentenceKey, Span, Trigger};
pub use ontology::{AnatomyLabel, AnatomyParent, Ontology, TermList, TriggerType};
pub use par::Parallelism;
pub use pipeline::{run, ModelBackend, PipelineConfig, PipelineKind, PipelineOutput};
pub use retrieval::{RetrievalConfig, SearchIndex};
pub use textio::{OutputFormat, StepKind};
