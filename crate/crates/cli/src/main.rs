//! `radevent` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 input schema, 3 backend failure.

mod commands;
mod config;
mod failure;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "radevent", version, about = "Radiology event extraction with text-to-text model backends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an extraction pipeline over a corpus.
    Extract(ExtractArgs),
    /// Score predictions against gold annotations; prints a JSON report.
    Evaluate(EvaluateArgs),
    /// Keep sentences that contain an anatomy term.
    FilterCorpus(FilterArgs),
    /// Build a BM25 snapshot from a sentence file.
    BuildIndex(BuildIndexArgs),
    /// Query a BM25 snapshot.
    Retrieve(RetrieveArgs),
    /// Export prompt/target pairs for fine-tuning.
    EmitTraining(TrainingArgs),
    /// Write synthetic data sets.
    #[command(subcommand)]
    Synthesize(SynthCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextArg {
    Adjacent,
    Metadata,
    Bm25,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Vanilla,
    Blocks,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus file (JSON Lines, one document per line).
    #[arg(long)]
    corpus: PathBuf,
    /// Predictions output (JSON Lines).
    #[arg(long)]
    out: PathBuf,
    /// three-step, two-step, one-step-vanilla or one-step-blocks.
    #[arg(long)]
    pipeline: Option<String>,
    /// Normalize anatomies with context (one-step-blocks only).
    #[arg(long, value_enum)]
    context: Option<ContextArg>,
    /// BM25 snapshot used by the bm25 and all contexts.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Replay these annotations instead of calling a model.
    #[arg(long, conflicts_with = "endpoint")]
    replay: Option<PathBuf>,
    /// Grammar used by the replay backend for per-entity steps.
    #[arg(long, value_enum)]
    replay_format: Option<FormatArg>,
    /// HTTP endpoint of a generation server.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    retries: Option<usize>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Custom ontology JSON.
    #[arg(long)]
    ontology: Option<PathBuf>,
    /// Cost report output; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-sentence pass log (JSON Lines).
    #[arg(long)]
    log: Option<PathBuf>,
    /// TOML file with defaults for any of the options above; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Validates offsets of both files against this corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Sentences, one per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Term list, one per line; the built-in anatomy terms when absent.
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    min_tokens: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Sentences, one per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sentences retrieved per query when used as context.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "blocks")]
    format: FormatArg,
    /// Add trigger detection/classification and anatomy normalization tasks.
    #[arg(long)]
    aux: bool,
    /// With --aux, also add standalone anatomy span detection.
    #[arg(long, requires = "aux")]
    anatomy_span: bool,
    #[arg(long)]
    ontology: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Annotated corpus with alignable entity texts.
    Annotated {
        #[arg(long)]
        corpus_out: PathBuf,
        #[arg(long)]
        annotations_out: PathBuf,
        #[arg(long, default_value_t = 20)]
        documents: usize,
        #[arg(long, default_value_t = 10)]
        sentences_per_document: usize,
        #[arg(long, default_value_t = 1)]
        max_triggers: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
    },
    /// 100 sentences, 36 of which contain an anatomy term.
    FilterFixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::FilterCorpus(a) => commands::filter_corpus(a),
        Command::BuildIndex(a) => commands::build_index(a),
        Command::Retrieve(a) => commands::retrieve(a),
        Command::EmitTraining(a) => commands::emit_training(a),
        Command::Synthesize(c) => commands::synthesize(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
