//! Token-level precision/recall/F1 of the disfluent class, per-arm reports
//! and side-by-side comparison tables.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{io_tags_to_spans, AnnotatedSentence, CorpusError, Span, TokenLabel};
use crate::model::{
    model_forward_with, token_baseline_forward, Examples, ModelError, ModelParameters,
};
use crate::scalar::Scalar;
use crate::spans::{decode, decoded_to_labels};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction has {pred} labels but gold has {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("comparison needs at least two reports, got {0}")]
    TooFewReports(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("comparison table: {0}")]
    Format(#[from] serde_json::Error),
}

/// A system configuration being scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    /// Span classifier with the gated graph branch.
    #[serde(rename = "span+gcn")]
    SpanGcn,
    /// Span classifier, graph branch off.
    #[serde(rename = "span")]
    Span,
    /// Per-token classifier head, no span decoding.
    #[serde(rename = "token-baseline")]
    TokenBaseline,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::SpanGcn, Arm::Span, Arm::TokenBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Arm::SpanGcn => "span+gcn",
            Arm::Span => "span",
            Arm::TokenBaseline => "token-baseline",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown arm {s:?}; expected span+gcn, span or token-baseline"))
    }
}

/// Scoring granularity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Every `I` token counts (edit-word scoring). The headline metric.
    #[default]
    Token,
    /// A predicted span counts only if it equals a gold run exactly.
    SpanExact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Counts for the `I` class over aligned label sequences.
pub fn token_prf(pred: &[TokenLabel], gold: &[TokenLabel]) -> Result<Counts, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let mut c = Counts::default();
    for (p, g) in pred.iter().zip(gold) {
        match (p, g) {
            (TokenLabel::I, TokenLabel::I) => c.tp += 1,
            (TokenLabel::I, TokenLabel::O) => c.fp += 1,
            (TokenLabel::O, TokenLabel::I) => c.fn_ += 1,
            (TokenLabel::O, TokenLabel::O) => {}
        }
    }
    Ok(c)
}

/// Exact-match counts between predicted spans and gold runs.
pub fn span_prf(pred: &[Span], gold: &[Span]) -> Counts {
    let tp = pred.iter().filter(|p| gold.contains(p)).count();
    Counts {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub arm: Arm,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n_sentences: usize,
    pub n_tokens: usize,
}

impl EvalReport {
    pub fn from_counts(arm: Arm, c: Counts, n_sentences: usize, n_tokens: usize) -> Self {
        EvalReport {
            arm,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            n_sentences,
            n_tokens,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

/// A span predicted disfluent, with its probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedSpan {
    pub start: usize,
    pub end: usize,
    pub p_i: f64,
}

/// Decoded output for one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub spans: Vec<PredictedSpan>,
    pub labels: Vec<TokenLabel>,
}

/// Runs one arm on one sentence.
///
/// Span arms decode the scored spans greedily; the token baseline takes the
/// per-token argmax (`I` only when strictly more probable), and its spans are
/// the resulting `I` runs with the mean token `P_I` attached.
pub fn predict<S: Scalar>(
    params: &ModelParameters<S>,
    sentence: &AnnotatedSentence,
    features: Option<ArrayView2<'_, S>>,
    arm: Arm,
) -> Result<Prediction, EvalError> {
    match arm {
        Arm::SpanGcn | Arm::Span => {
            let candidates = model_forward_with(sentence, params, features, arm == Arm::SpanGcn)?;
            let kept = decode(&candidates);
            let spans: Vec<Span> = kept.iter().map(|c| c.span).collect();
            let labels = decoded_to_labels(&spans, sentence.len())?;
            Ok(Prediction {
                spans: kept
                    .iter()
                    .map(|c| PredictedSpan {
                        start: c.span.start,
                        end: c.span.end,
                        p_i: c.p_i.as_f64(),
                    })
                    .collect(),
                labels,
            })
        }
        Arm::TokenBaseline => {
            let probs = token_baseline_forward(sentence, params, features)?;
            let labels: Vec<TokenLabel> = probs
                .iter()
                .map(|(pi, po)| {
                    if pi > po {
                        TokenLabel::I
                    } else {
                        TokenLabel::O
                    }
                })
                .collect();
            let spans = io_tags_to_spans(&labels)
                .into_iter()
                .map(|s| {
                    let mean = probs[s.start - 1..s.end]
                        .iter()
                        .map(|(pi, _)| pi.as_f64())
                        .sum::<f64>()
                        / s.len() as f64;
                    PredictedSpan {
                        start: s.start,
                        end: s.end,
                        p_i: mean,
                    }
                })
                .collect();
            Ok(Prediction { spans, labels })
        }
    }
}

/// Micro-averaged scores of `arm` over a corpus.
pub fn evaluate<S: Scalar>(
    params: &ModelParameters<S>,
    examples: Examples<'_, S>,
    arm: Arm,
    mode: ScoreMode,
) -> Result<EvalReport, EvalError> {
    let mut counts = Counts::default();
    let mut n_tokens = 0;
    for i in 0..examples.len() {
        let (sentence, features) = examples.input(i, &params.config)?;
        let pred = predict(params, sentence, features, arm)?;
        counts += score_sentence(&pred, sentence, mode)?;
        n_tokens += sentence.len();
    }
    Ok(EvalReport::from_counts(
        arm,
        counts,
        examples.len(),
        n_tokens,
    ))
}

pub fn score_sentence(
    pred: &Prediction,
    gold: &AnnotatedSentence,
    mode: ScoreMode,
) -> Result<Counts, EvalError> {
    match mode {
        ScoreMode::Token => token_prf(&pred.labels, &gold.labels),
        ScoreMode::SpanExact => {
            let spans: Vec<Span> = pred
                .spans
                .iter()
                .map(|s| Span::new(s.start, s.end))
                .collect();
            Ok(span_prf(&spans, &gold.gold_spans()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub arm: Arm,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set on every row attaining the top F1.
    pub best: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Lines reports up in P / R / F1 columns and flags the best F1 (ties all flagged).
pub fn compare(reports: &[EvalReport]) -> Result<ComparisonTable, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports(reports.len()));
    }
    let top = reports
        .iter()
        .map(|r| r.f1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonTable {
        rows: reports
            .iter()
            .map(|r| ComparisonRow {
                arm: r.arm,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
                best: r.f1 == top,
            })
            .collect(),
    })
}

impl ComparisonTable {
    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for ComparisonTable {
    /// Percentages with one decimal, best F1 marked with `*`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>6} {:>6} {:>7}", "Model", "P", "R", "F1")?;
        writeln!(f, "{}", "-".repeat(38))?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>6.1} {:>6.1} {:>6.1}{}",
                r.arm.name(),
                100.0 * r.precision,
                100.0 * r.recall,
                100.0 * r.f1,
                if r.best { "*" } else { " " }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenLabel::{I, O};

    #[test]
    fn identical_labels_score_one() {
        let c = token_prf(&[O, I, I, O], &[O, I, I, O]).unwrap();
        assert_eq!(
            c,
            Counts {
                tp: 2,
                fp: 0,
                fn_: 0
            }
        );
        assert_eq!((c.precision(), c.recall(), c.f1()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn partial_recall() {
        let c = token_prf(&[O, I, O, O], &[O, I, I, O]).unwrap();
        assert_eq!(
            c,
            Counts {
                tp: 1,
                fp: 0,
                fn_: 1
            }
        );
        assert_eq!(c.precision(), 1.0);
        assert_eq!(c.recall(), 0.5);
        assert!((c.f1() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let c = token_prf(&[O, O, O], &[O, I, O]).unwrap();
        assert_eq!((c.precision(), c.recall(), c.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(matches!(
            token_prf(&[O], &[O, I]),
            Err(EvalError::LengthMismatch { pred: 1, gold: 2 })
        ));
    }

    #[test]
    fn exact_span_counts() {
        let c = span_prf(
            &[Span::new(1, 2), Span::new(4, 4)],
            &[Span::new(1, 2), Span::new(5, 6)],
        );
        assert_eq!(
            c,
            Counts {
                tp: 1,
                fp: 1,
                fn_: 1
            }
        );
    }

    fn report(arm: Arm, tp: usize, fp: usize, fn_: usize) -> EvalReport {
        EvalReport::from_counts(arm, Counts { tp, fp, fn_ }, 1, 10)
    }

    #[test]
    fn report_json_uses_fn_key() {
        let r = report(Arm::SpanGcn, 3, 1, 2);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["fn"], 2);
        assert_eq!(v["arm"], "span+gcn");
        let back: EvalReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn compare_flags_ties() {
        let t = compare(&[report(Arm::SpanGcn, 3, 1, 1), report(Arm::Span, 3, 1, 1)]).unwrap();
        assert!(t.rows.iter().all(|r| r.best));
    }

    #[test]
    fn compare_three_arms() {
        let t = compare(&[
            report(Arm::SpanGcn, 9, 1, 1),
            report(Arm::Span, 8, 2, 2),
            report(Arm::TokenBaseline, 7, 3, 3),
        ])
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows.iter().filter(|r| r.best).count(), 1);
        assert!(t.rows[0].best);
        let text = t.to_string();
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("token-baseline"));
        assert_eq!(
            ComparisonTable::from_json(&t.to_json().unwrap()).unwrap(),
            t
        );
    }

    #[test]
    fn compare_needs_two() {
        assert!(matches!(
            compare(&[report(Arm::Span, 1, 0, 0)]),
            Err(EvalError::TooFewReports(1))
        ));
    }

    #[test]
    fn arm_names_parse() {
        for a in Arm::ALL {
            assert_eq!(a.name().parse::<Arm>().unwrap(), a);
        }
        assert!("crf".parse::<Arm>().is_err());
    }
}
