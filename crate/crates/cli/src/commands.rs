use std::collections::BTreeSet;
use std::io::{ErrorKind, Write};
use std::time::Duration;

use radevent::context::ContextKind;
use radevent::eval::evaluate as score;
use radevent::event::Annotations;
use radevent::io::{write_annotations, write_corpus, write_jsonl};
use radevent::ontology::{default_term_list, TermList};
use radevent::par::Parallelism;
use radevent::pipeline::{
    run, GoldReplayBackend, ModelBackend, PipelineConfig, PipelineError, PipelineKind, RemoteBackend,
    WhitespaceTokenizer,
};
use radevent::retrieval::{filter_corpus as filter, RetrievalConfig, SearchIndex};
use radevent::synthetic::{annotated_corpus, filter_fixture, CorpusShape};
use radevent::textio::{emit_training_pairs, OutputFormat, TrainingOptions};

use crate::config::ExtractConfig;
use crate::failure::{Classify, CliResult, Failure};
use crate::{files, BuildIndexArgs, ContextArg, EvaluateArgs, ExtractArgs, FilterArgs, FormatArg};
use crate::{RetrieveArgs, SynthCommand, TrainingArgs};

impl From<ContextArg> for ContextKind {
    fn from(c: ContextArg) -> Self {
        match c {
            ContextArg::Adjacent => ContextKind::AdjacentSentences,
            ContextArg::Metadata => ContextKind::MetadataAndHeader,
            ContextArg::Bm25 => ContextKind::Bm25Retrieval,
            ContextArg::All => ContextKind::AllCombined,
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Vanilla => OutputFormat::Vanilla,
            FormatArg::Blocks => OutputFormat::Blocks,
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).usage("cannot serialize output")?;
    stdout_ok(writeln!(std::io::stdout().lock(), "{text}"))
}

/// A closed pipe on stdout (`| head`) is not an error.
fn stdout_ok(result: std::io::Result<()>) -> CliResult<()> {
    match result {
        Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
        other => other.usage("cannot write to stdout"),
    }
}

pub fn extract(args: ExtractArgs) -> CliResult<()> {
    let cfg = match &args.config {
        Some(path) => ExtractConfig::load(path)?,
        None => ExtractConfig::default(),
    }
    .merge(&args);

    let name = cfg.pipeline.as_deref().unwrap_or("one-step-blocks");
    let kind: PipelineKind = name.parse().usage("bad --pipeline")?;
    let kind = kind.with_context(cfg.context.map(ContextKind::from)).usage("bad --context")?;
    let ontology = files::ontology(cfg.ontology.as_deref())?;
    let corpus = files::corpus(&args.corpus)?;
    let index = match &cfg.index {
        Some(p) => Some(SearchIndex::load(p).input(format!("invalid index {}", p.display()))?),
        None => None,
    };

    let backend: Box<dyn ModelBackend> = match (&cfg.replay, &cfg.endpoint) {
        (Some(path), _) => {
            let gold = files::annotations(path, &ontology, Some(&corpus))?;
            let format = cfg.replay_format.map(OutputFormat::from).unwrap_or(OutputFormat::Vanilla);
            Box::new(GoldReplayBackend::new(gold, format))
        }
        (None, Some(url)) => {
            let mut remote = RemoteBackend::new(url.clone());
            if let Some(s) = cfg.timeout_secs {
                remote = remote.with_timeout(Duration::from_secs(s));
            }
            if let Some(r) = cfg.retries {
                remote = remote.with_retries(r);
            }
            Box::new(remote)
        }
        (None, None) => return Err(Failure::usage("a backend is required: pass --replay or --endpoint")),
    };

    let config = PipelineConfig {
        ontology: &ontology,
        retriever: index.as_ref(),
        parallelism: Parallelism::from_threads(cfg.threads),
    };
    let output = run(kind, &corpus, backend.as_ref(), &WhitespaceTokenizer, &config).map_err(|e| match e {
        PipelineError::Context(_) | PipelineError::ContextUnsupported(_) | PipelineError::UnknownKind(_) => {
            Failure::usage(e)
        }
    })?;

    for log in &output.logs {
        if let Some(err) = &log.error {
            eprintln!("warning: {}: {err}", log.key);
        }
    }
    let report = output.cost();
    files::write_atomic(&args.out, |w| Ok(write_annotations(w, &output.predictions)?))?;
    if let Some(path) = &args.log {
        files::write_atomic(path, |w| Ok(write_jsonl(w, &output.logs)?))?;
    }
    match &args.report {
        Some(path) => files::write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            Ok(w.write_all(b"\n")?)
        })?,
        None => print_json(&report)?,
    }
    if report.samples > 0 && report.failures == report.samples {
        return Err(Failure::backend(format!("backend failed on all {} sentences", report.samples)));
    }
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let ontology = files::ontology(args.ontology.as_deref())?;
    let corpus = match &args.corpus {
        Some(p) => Some(files::corpus(p)?),
        None => None,
    };
    let gold = files::annotations(&args.gold, &ontology, corpus.as_ref())?;
    let pred = files::annotations(&args.pred, &ontology, corpus.as_ref())?;
    check_documents(&gold, &pred)?;
    let mut report = score(&gold, &pred, Parallelism::from_threads(args.threads));
    report.config.insert("gold".into(), args.gold.display().to_string());
    report.config.insert("pred".into(), args.pred.display().to_string());
    report.config.insert("overlap".into(), "character".into());
    report.config.insert("matching".into(), "greedy one-to-one".into());
    print_json(&report)
}

/// Predictions may only name documents the gold file covers.
fn check_documents(gold: &Annotations, pred: &Annotations) -> CliResult<()> {
    let docs: BTreeSet<&str> = gold.keys().map(|k| k.doc_id.as_str()).collect();
    let unknown: BTreeSet<&str> =
        pred.keys().map(|k| k.doc_id.as_str()).filter(|d| !docs.contains(d)).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        let list = unknown.into_iter().collect::<Vec<_>>().join(", ");
        Err(Failure::input(format!("predictions name documents missing from gold: {list}")))
    }
}

pub fn filter_corpus(args: FilterArgs) -> CliResult<()> {
    let sentences = files::lines(&args.input)?;
    let terms = match &args.terms {
        Some(p) => TermList::new(files::lines(p)?).input(format!("invalid term list {}", p.display()))?,
        None => default_term_list(),
    };
    let kept = filter(&sentences, &terms, args.min_tokens, Parallelism::from_threads(args.threads));
    files::write_atomic(&args.out, |w| {
        for s in &kept {
            writeln!(w, "{s}")?;
        }
        Ok(())
    })?;
    println!("{}/{} retained", kept.len(), sentences.len());
    Ok(())
}

pub fn build_index(args: BuildIndexArgs) -> CliResult<()> {
    let defaults = RetrievalConfig::default();
    let config = RetrievalConfig {
        k1: args.k1.unwrap_or(defaults.k1),
        b: args.b.unwrap_or(defaults.b),
        epsilon: args.epsilon.unwrap_or(defaults.epsilon),
        top_k: args.top_k.unwrap_or(defaults.top_k),
        ..defaults
    };
    config.validate().usage("invalid BM25 parameters")?;
    let sentences = files::lines(&args.input)?;
    let count = sentences.len();
    let index = SearchIndex::build(sentences, config);
    files::write_atomic(&args.out, |w| Ok(index.write_snapshot(w)?))?;
    println!("indexed {count} sentences");
    Ok(())
}

pub fn retrieve(args: RetrieveArgs) -> CliResult<()> {
    let index = SearchIndex::load(&args.index).input(format!("invalid index {}", args.index.display()))?;
    let top_k = args.top_k.unwrap_or(index.config().top_k);
    let hits = index.retrieve(&args.query, top_k).input("retrieval failed")?;
    let mut out = std::io::stdout().lock();
    for hit in &hits {
        let line = serde_json::to_string(hit).usage("cannot serialize output")?;
        stdout_ok(writeln!(out, "{line}"))?;
    }
    Ok(())
}

pub fn emit_training(args: TrainingArgs) -> CliResult<()> {
    let ontology = files::ontology(args.ontology.as_deref())?;
    let corpus = files::corpus(&args.corpus)?;
    let gold = files::annotations(&args.annotations, &ontology, Some(&corpus))?;
    let options = TrainingOptions {
        format: args.format.into(),
        include_aux: args.aux,
        include_anatomy_span: args.anatomy_span,
    };
    let records = emit_training_pairs(&corpus, &gold, &ontology, options);
    files::write_atomic(&args.out, |w| Ok(write_jsonl(w, &records)?))?;
    println!("wrote {} training records", records.len());
    Ok(())
}

pub fn synthesize(command: SynthCommand) -> CliResult<()> {
    match command {
        SynthCommand::Annotated {
            corpus_out,
            annotations_out,
            documents,
            sentences_per_document,
            max_triggers,
            seed,
        } => {
            if max_triggers == 0 {
                return Err(Failure::usage("--max-triggers must be at least 1"));
            }
            let shape = CorpusShape {
                documents,
                sentences_per_document,
                max_triggers,
                anatomy_rate: CorpusShape::default().anatomy_rate * max_triggers as f64,
                seed,
                ..CorpusShape::default()
            };
            let (corpus, gold) = annotated_corpus(&shape);
            files::write_atomic(&corpus_out, |w| Ok(write_corpus(w, &corpus)?))?;
            files::write_atomic(&annotations_out, |w| Ok(write_annotations(w, &gold)?))?;
            println!("{} documents, {} sentences", corpus.documents.len(), corpus.sentence_count());
        }
        SynthCommand::FilterFixture { out, seed } => {
            let fixture = filter_fixture(seed);
            files::write_atomic(&out, |w| {
                for (s, _) in &fixture {
                    writeln!(w, "{s}")?;
                }
                Ok(())
            })?;
            println!("{} sentences", fixture.len());
        }
    }
    Ok(())
}
