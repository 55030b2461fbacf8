//! Sequential vs rayon throughput for the batch entry points.
//!
//! Build with `--no-default-features` to confirm the parallel arm degrades to
//! the sequential loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use radevent::eval::evaluate;
use radevent::ontology::default_term_list;
use radevent::par::Parallelism;
use radevent::pipeline::{run, GoldReplayBackend, PipelineConfig, PipelineKind, WhitespaceTokenizer};
use radevent::retrieval::{filter_corpus, RetrievalConfig, SearchIndex};
use radevent::synthetic::{annotated_corpus, sentence_pool, CorpusShape};
use radevent::textio::OutputFormat;

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel { threads: None }),
];

fn shape() -> CorpusShape {
    CorpusShape {
        documents: 100,
        sentences_per_document: 10,
        max_triggers: 2,
        anatomy_rate: 1.2,
        ..CorpusShape::default()
    }
}

fn pipeline(c: &mut Criterion) {
    let (corpus, gold) = annotated_corpus(&shape());
    let backend = GoldReplayBackend::new(gold, OutputFormat::Vanilla);
    let mut group = c.benchmark_group("pipeline");
    group.throughput(Throughput::Elements(corpus.sentence_count() as u64));
    group.sample_size(20);
    for kind in [PipelineKind::ThreeStepVanilla, PipelineKind::OneStepBlocks] {
        for (name, parallelism) in MODES {
            let config = PipelineConfig { parallelism, ..PipelineConfig::default() };
            group.bench_with_input(BenchmarkId::new(kind.to_string(), name), &config, |b, config| {
                b.iter(|| run(kind, &corpus, &backend, &WhitespaceTokenizer, config).unwrap())
            });
        }
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let (_, gold) = annotated_corpus(&CorpusShape { documents: 500, ..shape() });
    let (_, other) = annotated_corpus(&CorpusShape { documents: 500, seed: 7, ..shape() });
    let mut group = c.benchmark_group("evaluate");
    group.throughput(Throughput::Elements(gold.len() as u64));
    for (name, parallelism) in MODES {
        group.bench_function(name, |b| b.iter(|| evaluate(black_box(&gold), black_box(&other), parallelism)));
    }
    group.finish();
}

fn filtering(c: &mut Criterion) {
    let pool = sentence_pool(20_000, 11);
    let terms = default_term_list();
    let mut group = c.benchmark_group("filter_corpus");
    group.throughput(Throughput::Elements(pool.len() as u64));
    for (name, parallelism) in MODES {
        group.bench_function(name, |b| b.iter(|| filter_corpus(black_box(&pool), &terms, 3, parallelism)));
    }
    group.finish();
}

fn retrieval(c: &mut Criterion) {
    let pool = sentence_pool(20_000, 5);
    let index = SearchIndex::build(pool.iter().cloned(), RetrievalConfig::default());
    let query = "small hypodense lesion in the left lobe of the liver";
    let mut group = c.benchmark_group("bm25_retrieve");
    group.throughput(Throughput::Elements(pool.len() as u64));
    for (name, parallelism) in MODES {
        group.bench_function(name, |b| b.iter(|| index.retrieve_with(black_box(query), 1, parallelism).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, pipeline, scoring, filtering, retrieval);
criterion_main!(benches);
