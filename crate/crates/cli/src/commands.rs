use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use spandisfl::corpus::{import_conllu, load_jsonl, preprocess_corpus, write_jsonl, CorpusError};
use spandisfl::eval::{
    self, compare as compare_reports, Arm, ComparisonRow, ComparisonTable, EvalError, EvalReport,
    PredictedSpan, ScoreMode,
};
use spandisfl::model::{EncoderKind, Examples, ModelError, PrecomputedEmbeddings};
use spandisfl::synth::{generate, split, SynthError};
use spandisfl::train::{
    load_checkpoint, save_checkpoint, train_with, CheckpointError, Objective, TrainError,
};
use spandisfl::{AnnotatedSentence, Model, Span, TokenLabel};

use crate::config::{require, RunConfig};
use crate::{
    CliError, CompareArgs, EvalArgs, InspectArgs, ModelInput, PredictArgs, PreprocessArgs,
    SynthArgs, TrainArgs,
};

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::TooFewReports(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::EmptyCorpus => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            TrainError::EmptyCorpus | TrainError::Model(_) | TrainError::Eval(_) => {
                CliError::Data(e.to_string())
            }
            TrainError::NonFiniteLoss { .. } | TrainError::NonFiniteParameters { .. } => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| write_err(path, e))
}

fn load_features(path: Option<&PathBuf>) -> Result<Option<PrecomputedEmbeddings<f64>>, CliError> {
    path.map(PrecomputedEmbeddings::load)
        .transpose()
        .map_err(CliError::from)
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let out = require(args.out, &run.out, "out")?;
    let mut config = run.synth;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.num_sentences {
        config.num_sentences = n;
    }
    let corpus = generate(&config)?;
    write_jsonl(&out, &corpus).map_err(|e| write_err(&out, e))?;
    eprintln!("wrote {} sentences to {}", corpus.len(), out.display());
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let corpus_path = require(args.corpus, &run.corpus, "corpus")?;
    let out = args
        .out
        .or(run.out.clone())
        .unwrap_or_else(|| PathBuf::from("model.ckpt"));
    let metrics_path = args
        .metrics
        .or(run.metrics.clone())
        .unwrap_or_else(|| out.with_extension("metrics.jsonl"));

    let mut config = run.train.clone();
    if let Some(arm) = args.arm.or(run.arm) {
        config.objective = match arm {
            Arm::TokenBaseline => Objective::Token,
            Arm::SpanGcn | Arm::Span => Objective::Span,
        };
        config.model.use_gcn = arm == Arm::SpanGcn;
    }
    if let Some(v) = args.use_gcn {
        config.model.use_gcn = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.max_span_len {
        config.model.max_span_len = v;
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = args.class_weight_i {
        config.class_weight_i = v;
    }

    let features = load_features(args.features.or(run.features.clone()).as_ref())?;
    let dev_features = load_features(args.dev_features.or(run.dev_features.clone()).as_ref())?;
    if features.is_some() {
        config.model.encoder = EncoderKind::Precomputed;
    }

    let corpus = load_jsonl(&corpus_path)?;
    let (train_set, dev_set) = match args.dev.or(run.dev.clone()) {
        Some(dev) => (corpus, load_jsonl(&dev)?),
        None => {
            if features.is_some() {
                return Err(CliError::Usage(
                    "--features needs an explicit --dev with --dev-features".into(),
                ));
            }
            let (tr, dev, _) = split(&corpus, [0.9, 0.1, 0.0], config.seed)?;
            (tr, dev)
        }
    };

    let outcome = train_with(
        Examples::new(&train_set, features.as_ref()),
        Examples::new(&dev_set, dev_features.as_ref()),
        &config,
        |m| {
            eprintln!(
                "epoch {:>3}  loss {:.5}  dev P {:.4} R {:.4} F1 {:.4}",
                m.epoch, m.train_loss, m.dev_p, m.dev_r, m.dev_f1
            )
        },
    )?;
    save_checkpoint(&outcome.params, &out).map_err(|e| write_err(&out, e))?;
    let mut lines = String::new();
    for m in &outcome.metrics {
        lines.push_str(&serde_json::to_string(m).expect("metrics serialize"));
        lines.push('\n');
    }
    write_file(&metrics_path, &lines)?;
    if outcome.unreachable_gold > 0 {
        eprintln!(
            "note: {} gold span occurrences exceeded max_span_len",
            outcome.unreachable_gold
        );
    }
    eprintln!(
        "wrote {} (best epoch {}) and {}",
        out.display(),
        outcome
            .best_epoch
            .map_or_else(|| "none".to_string(), |e| e.to_string()),
        metrics_path.display()
    );
    Ok(())
}

struct Loaded {
    params: Model,
    corpus: Vec<AnnotatedSentence>,
    features: Option<PrecomputedEmbeddings<f64>>,
    arm: Arm,
}

impl Loaded {
    fn examples(&self) -> Examples<'_, f64> {
        Examples::new(&self.corpus, self.features.as_ref())
    }
}

fn load_inputs(input: ModelInput, run: &RunConfig) -> Result<Loaded, CliError> {
    let model_path = require(input.model, &run.model, "model")?;
    let corpus_path = require(input.corpus, &run.corpus, "corpus")?;
    let mut params: Model = load_checkpoint(&model_path)?;
    if let Some(l) = input.max_span_len {
        let trained = params.weights.length_table.nrows();
        if l == 0 || l > trained {
            return Err(CliError::Usage(format!(
                "--max-span-len must lie in 1..={trained} for this checkpoint"
            )));
        }
        params.config.max_span_len = l;
    }
    let arm = input.arm.or(run.arm).unwrap_or(if params.config.use_gcn {
        Arm::SpanGcn
    } else {
        Arm::Span
    });
    Ok(Loaded {
        params,
        corpus: load_jsonl(&corpus_path)?,
        features: load_features(input.features.or(run.features.clone()).as_ref())?,
        arm,
    })
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    index: usize,
    tokens: &'a [String],
    spans: Vec<PredictedSpan>,
    labels: Vec<TokenLabel>,
}

pub fn predict(args: PredictArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let out_path = args.out.or(run.out.clone());
    let loaded = load_inputs(args.input, &run)?;
    let examples = loaded.examples();
    let mut text = String::new();
    for i in 0..examples.len() {
        let (sentence, features) = examples.input(i, &loaded.params.config)?;
        let pred = eval::predict(&loaded.params, sentence, features, loaded.arm)?;
        let record = PredictionRecord {
            index: i,
            tokens: &sentence.tokens,
            spans: pred.spans,
            labels: pred.labels,
        };
        text.push_str(&serde_json::to_string(&record).expect("prediction serializes"));
        text.push('\n');
    }
    match out_path {
        Some(p) => write_file(&p, &text),
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
        }
    }
}

fn single_row(report: &EvalReport) -> ComparisonTable {
    ComparisonTable {
        rows: vec![ComparisonRow {
            arm: report.arm,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
            best: true,
        }],
    }
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let out_path = args.out.or(run.out.clone());
    let loaded = load_inputs(args.input, &run)?;
    let mode = if args.span_exact {
        ScoreMode::SpanExact
    } else {
        ScoreMode::Token
    };
    let report = eval::evaluate(&loaded.params, loaded.examples(), loaded.arm, mode)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    print!("{}", single_row(&report));
    match out_path {
        Some(p) => write_file(&p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn bracketed(tokens: &[String], spans: &[(Span, Option<f64>)]) -> String {
    let mut line = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let pos = i + 1;
        if i > 0 {
            line.push(' ');
        }
        if spans.iter().any(|(s, _)| s.start == pos) {
            line.push('[');
        }
        line.push_str(tok);
        if let Some((_, p)) = spans.iter().find(|(s, _)| s.end == pos) {
            line.push(']');
            if let Some(p) = p {
                let _ = write!(line, "{{{p:.3}}}");
            }
        }
    }
    line
}

pub fn inspect(args: InspectArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let loaded = load_inputs(args.input, &run)?;
    let examples = loaded.examples();
    let mut text = String::new();
    for &i in &args.indices {
        if i >= examples.len() {
            return Err(CliError::Usage(format!(
                "index {i} out of range (corpus has {} sentences)",
                examples.len()
            )));
        }
        let (sentence, features) = examples.input(i, &loaded.params.config)?;
        let pred = eval::predict(&loaded.params, sentence, features, loaded.arm)?;
        let gold: Vec<(Span, Option<f64>)> = sentence
            .gold_spans()
            .into_iter()
            .map(|s| (s, None))
            .collect();
        let predicted: Vec<(Span, Option<f64>)> = pred
            .spans
            .iter()
            .map(|s| (Span::new(s.start, s.end), Some(s.p_i)))
            .collect();
        let _ = writeln!(text, "#{i} ({})", loaded.arm);
        let _ = writeln!(text, "  gold: {}", bracketed(&sentence.tokens, &gold));
        let _ = writeln!(text, "  pred: {}", bracketed(&sentence.tokens, &predicted));
    }
    print!("{text}");
    Ok(())
}

pub fn preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let out = require(args.out, &run.out, "out")?;
    let raw = match (args.conllu, args.labels) {
        (Some(conllu), Some(labels)) => import_conllu(conllu, labels)?,
        _ => load_jsonl(require(args.corpus, &run.corpus, "corpus")?)?,
    };
    let (kept, dropped) = preprocess_corpus(&raw);
    write_jsonl(&out, &kept).map_err(|e| write_err(&out, e))?;
    eprintln!(
        "wrote {} sentences to {} ({dropped} dropped as empty)",
        kept.len(),
        out.display()
    );
    Ok(())
}

pub fn compare(args: CompareArgs) -> Result<(), CliError> {
    let mut reports = Vec::with_capacity(args.reports.len());
    for path in &args.reports {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let report: EvalReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let table = compare_reports(&reports)?;
    print!("{table}");
    if let Some(out) = args.out {
        write_file(&out, &(table.to_json()? + "\n"))?;
    }
    Ok(())
}
