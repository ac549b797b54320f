mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use spandisfl::eval::Arm;
use thiserror::Error;

/// Span-classification disfluency detection over dependency-parsed transcripts.
#[derive(Debug, Parser)]
#[command(name = "spandisfl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic disfluent corpus as JSONL.
    Synth(SynthArgs),
    /// Train a model and write a checkpoint plus per-epoch metrics.
    Train(TrainArgs),
    /// Decode spans and IO labels for every sentence of a corpus.
    Predict(PredictArgs),
    /// Score a model on a labeled corpus and print the P/R/F1 table.
    Eval(EvalArgs),
    /// Show gold and predicted spans for selected sentences.
    Inspect(InspectArgs),
    /// Clean a corpus (case, punctuation, partial words), or import CoNLL-U.
    Preprocess(PreprocessArgs),
    /// Combine saved evaluation reports into one comparison table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Output corpus (JSONL).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    num_sentences: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Training corpus (JSONL).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Dev corpus; without it 10% of the training corpus is held out.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Checkpoint to write [default: model.ckpt].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics JSONL to write [default: checkpoint path with .metrics.jsonl].
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_span_len: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// span+gcn, span or token-baseline; sets the objective and graph flag.
    #[arg(long)]
    arm: Option<Arm>,
    /// Enable the gated graph branch (true/false).
    #[arg(long, action = ArgAction::Set)]
    use_gcn: Option<bool>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Loss weight of the disfluent class.
    #[arg(long)]
    class_weight_i: Option<f64>,
    /// Precomputed encoder features for the training corpus (JSONL sidecar).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Precomputed encoder features for the dev corpus.
    #[arg(long)]
    dev_features: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelInput {
    /// Checkpoint to load.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Corpus (JSONL).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// span+gcn, span or token-baseline [default: from the checkpoint].
    #[arg(long)]
    arm: Option<Arm>,
    /// Override the checkpoint's span length limit.
    #[arg(long)]
    max_span_len: Option<usize>,
    /// Precomputed encoder features (JSONL sidecar).
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: ModelInput,
    /// Predictions JSONL [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: ModelInput,
    /// Report JSON to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Score exact span matches instead of tokens.
    #[arg(long)]
    span_exact: bool,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: ModelInput,
    /// 0-based sentence indices to show.
    #[arg(long = "index", required = true, num_args = 1..)]
    indices: Vec<usize>,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[command(flatten)]
    common: Common,
    /// Input corpus (JSONL).
    #[arg(long, conflicts_with = "conllu")]
    corpus: Option<PathBuf>,
    /// CoNLL-U parses to import instead of a JSONL corpus.
    #[arg(long, requires = "labels")]
    conllu: Option<PathBuf>,
    /// IO label file for --conllu, one sentence per line.
    #[arg(long, requires = "conllu")]
    labels: Option<PathBuf>,
    /// Output corpus (JSONL).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// EvalReport JSON files, at least two.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Comparison table JSON to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Inspect(a) => commands::inspect(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spandisfl: {e}");
            ExitCode::from(e.code())
        }
    }
}
