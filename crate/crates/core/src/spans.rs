//! Span enumeration, exact-match gold assignment and greedy non-overlap decoding.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{io_tags_to_spans, spans_to_io, CorpusError, Span, TokenLabel};
use crate::scalar::{log_softmax2, softmax2, Scalar};

/// A scored span. `predicted` is `I` only when `p_i` strictly exceeds `p_o`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanCandidate<S> {
    pub span: Span,
    pub logit_i: S,
    pub logit_o: S,
    pub p_i: S,
    pub p_o: S,
    pub predicted: TokenLabel,
}

impl<S: Scalar> SpanCandidate<S> {
    pub fn from_logits(span: Span, logit_i: S, logit_o: S) -> Self {
        let (p_i, p_o) = softmax2(logit_i, logit_o);
        let predicted = if p_i > p_o {
            TokenLabel::I
        } else {
            TokenLabel::O
        };
        SpanCandidate {
            span,
            logit_i,
            logit_o,
            p_i,
            p_o,
            predicted,
        }
    }

    /// Candidate with `P_I = p_i`; `p_i` must lie strictly inside (0, 1).
    pub fn from_probability(span: Span, p_i: S) -> Self {
        Self::from_logits(span, p_i.ln(), (S::one() - p_i).ln())
    }

    pub fn log_probs(&self) -> (S, S) {
        log_softmax2(self.logit_i, self.logit_o)
    }
}

/// Number of spans of length at most `max_len` in a sentence of `len` tokens.
pub fn span_count(len: usize, max_len: usize) -> usize {
    (1..=max_len.min(len)).map(|k| len - k + 1).sum()
}

/// All spans of length at most `max_len`, ordered by length, then start.
pub fn enumerate_spans(len: usize, max_len: usize) -> Vec<Span> {
    let mut out = Vec::with_capacity(span_count(len, max_len));
    for k in 1..=max_len.min(len) {
        for start in 1..=len + 1 - k {
            out.push(Span::new(start, start + k - 1));
        }
    }
    out
}

/// Gold classes for enumerated spans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldAssignment {
    pub labels: Vec<TokenLabel>,
    /// Gold runs absent from the enumerated set (longer than the span limit).
    pub unreachable: Vec<Span>,
}

/// A span is `I` iff it is exactly a maximal `I` run; sub-spans of a run are `O`.
pub fn assign_gold(spans: &[Span], labels: &[TokenLabel]) -> GoldAssignment {
    let runs = io_tags_to_spans(labels);
    let run_set: HashSet<Span> = runs.iter().copied().collect();
    let span_set: HashSet<Span> = spans.iter().copied().collect();
    GoldAssignment {
        labels: spans
            .iter()
            .map(|s| {
                if run_set.contains(s) {
                    TokenLabel::I
                } else {
                    TokenLabel::O
                }
            })
            .collect(),
        unreachable: runs.into_iter().filter(|r| !span_set.contains(r)).collect(),
    }
}

pub fn overlaps(a: Span, b: Span) -> bool {
    a.start.max(b.start) <= a.end.min(b.end)
}

/// Orders candidates for greedy selection: higher `p_i` first, then earlier
/// start, then shorter.
fn selection_order<S: Scalar>(a: &SpanCandidate<S>, b: &SpanCandidate<S>) -> Ordering {
    b.p_i
        .as_f64()
        .total_cmp(&a.p_i.as_f64())
        .then(a.span.start.cmp(&b.span.start))
        .then(a.span.len().cmp(&b.span.len()))
}

/// Keeps the most probable `I`-predicted spans that do not overlap anything
/// already kept. `O`-predicted spans never suppress anything.
pub fn decode<S: Scalar>(candidates: &[SpanCandidate<S>]) -> Vec<SpanCandidate<S>> {
    let mut positive: Vec<SpanCandidate<S>> = candidates
        .iter()
        .filter(|c| c.predicted == TokenLabel::I)
        .copied()
        .collect();
    positive.sort_by(selection_order);
    let mut kept: Vec<SpanCandidate<S>> = Vec::new();
    for c in positive {
        if kept.iter().all(|k| !overlaps(k.span, c.span)) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.span.start);
    kept
}

pub fn decoded_to_labels(kept: &[Span], len: usize) -> Result<Vec<TokenLabel>, CorpusError> {
    spans_to_io(kept, len)
}
