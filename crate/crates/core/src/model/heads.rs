//! Span and token classification heads.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::{FusedEncoding, ModelError, ModelParameters, ParamSet, SpanRepresentation, Tape};
use crate::corpus::{AnnotatedSentence, Span};
use crate::scalar::{softmax2, Scalar};
use crate::spans::{enumerate_spans, SpanCandidate};

fn check_span(span: Span, len: usize, max: usize) -> Result<(), ModelError> {
    if span.start == 0 || span.start > span.end || span.end > len {
        return Err(ModelError::SpanOutOfRange { span, len });
    }
    if span.len() > max {
        return Err(ModelError::SpanTooLong { span, max });
    }
    Ok(())
}

/// `[z_b ; z_e ; length_table[e - b + 1]]`.
pub fn span_representation<S: Scalar>(
    fused: &FusedEncoding<S>,
    span: Span,
    params: &ModelParameters<S>,
) -> Result<SpanRepresentation<S>, ModelError> {
    let z = &fused.z;
    check_span(span, z.nrows(), params.weights.length_table.nrows())?;
    let vector = concatenate![
        Axis(0),
        z.row(span.start - 1),
        z.row(span.end - 1),
        params.weights.length_table.row(span.len() - 1)
    ];
    Ok(SpanRepresentation { span, vector })
}

/// `(P_I, P_O)` with `P_k = softmax_k(j . y_k)`.
pub fn span_probabilities<S: Scalar>(
    j: &SpanRepresentation<S>,
    params: &ModelParameters<S>,
) -> (S, S) {
    let logits = params.weights.prototypes.dot(&j.vector);
    softmax2(logits[0], logits[1])
}

/// The prototype matrix split into its start, end and length blocks.
fn prototype_blocks<S: Scalar>(
    w: &ParamSet<S>,
    d2: usize,
) -> (ArrayView2<'_, S>, ArrayView2<'_, S>, ArrayView2<'_, S>) {
    (
        w.prototypes.slice(s![.., ..d2]),
        w.prototypes.slice(s![.., d2..2 * d2]),
        w.prototypes.slice(s![.., 2 * d2..]),
    )
}

/// Logits (`m x 2`, columns I and O) of every span, computed blockwise:
/// `j . y = z_b . y_start + z_e . y_end + len . y_len`.
pub(crate) fn span_logits<S: Scalar>(
    z: &Array2<S>,
    spans: &[Span],
    params: &ModelParameters<S>,
) -> Result<Array2<S>, ModelError> {
    let w = &params.weights;
    let (ys, ye, yl) = prototype_blocks(w, z.ncols());
    let start = z.dot(&ys.t());
    let end = z.dot(&ye.t());
    let len = w.length_table.dot(&yl.t());
    let mut out = Array2::zeros((spans.len(), 2));
    for (i, sp) in spans.iter().enumerate() {
        check_span(*sp, z.nrows(), w.length_table.nrows())?;
        for k in 0..2 {
            out[[i, k]] = start[[sp.start - 1, k]] + end[[sp.end - 1, k]] + len[[sp.len() - 1, k]];
        }
    }
    Ok(out)
}

/// Backward of [`span_logits`]: accumulates prototype and length-table
/// gradients and returns `dL/dZ`.
pub(crate) fn span_logits_backward<S: Scalar>(
    z: &Array2<S>,
    spans: &[Span],
    d_logits: &Array2<S>,
    params: &ModelParameters<S>,
    grads: &mut ParamSet<S>,
) -> Array2<S> {
    let w = &params.weights;
    let d2 = z.ncols();
    let mut d_start = Array2::<S>::zeros((z.nrows(), 2));
    let mut d_end = Array2::<S>::zeros((z.nrows(), 2));
    let mut d_len = Array2::<S>::zeros((w.length_table.nrows(), 2));
    for (i, sp) in spans.iter().enumerate() {
        let g = d_logits.row(i);
        let mut r = d_start.row_mut(sp.start - 1);
        r += &g;
        let mut r = d_end.row_mut(sp.end - 1);
        r += &g;
        let mut r = d_len.row_mut(sp.len() - 1);
        r += &g;
    }
    {
        let mut gp = grads.prototypes.slice_mut(s![.., ..d2]);
        gp += &d_start.t().dot(z);
    }
    {
        let mut gp = grads.prototypes.slice_mut(s![.., d2..2 * d2]);
        gp += &d_end.t().dot(z);
    }
    {
        let mut gp = grads.prototypes.slice_mut(s![.., 2 * d2..]);
        gp += &d_len.t().dot(&w.length_table);
    }
    let (ys, ye, yl) = prototype_blocks(w, d2);
    grads.length_table += &d_len.dot(&yl);
    d_start.dot(&ys) + d_end.dot(&ye)
}

/// Per-token logits `B z_t + b_B` (`T x 2`).
pub(crate) fn token_logits<S: Scalar>(z: &Array2<S>, params: &ModelParameters<S>) -> Array2<S> {
    let w = &params.weights;
    z.dot(&w.baseline_w.t()) + &w.baseline_b
}

/// Backward of [`token_logits`]; returns `dL/dZ`.
pub(crate) fn token_logits_backward<S: Scalar>(
    z: &Array2<S>,
    d_logits: &Array2<S>,
    params: &ModelParameters<S>,
    grads: &mut ParamSet<S>,
) -> Array2<S> {
    grads.baseline_w += &d_logits.t().dot(z);
    grads.baseline_b += &d_logits.sum_axis(Axis(0));
    d_logits.dot(&params.weights.baseline_w)
}

pub(crate) fn candidates_from_logits<S: Scalar>(
    spans: &[Span],
    logits: &Array2<S>,
) -> Vec<SpanCandidate<S>> {
    spans
        .iter()
        .zip(logits.rows())
        .map(|(sp, l)| SpanCandidate::from_logits(*sp, l[0], l[1]))
        .collect()
}

/// Scores every span up to the configured maximum length.
pub fn model_forward<S: Scalar>(
    sentence: &AnnotatedSentence,
    params: &ModelParameters<S>,
    features: Option<ArrayView2<'_, S>>,
) -> Result<Vec<SpanCandidate<S>>, ModelError> {
    model_forward_with(sentence, params, features, params.config.use_gcn)
}

/// [`model_forward`] with the graph branch switched explicitly.
pub fn model_forward_with<S: Scalar>(
    sentence: &AnnotatedSentence,
    params: &ModelParameters<S>,
    features: Option<ArrayView2<'_, S>>,
    use_gcn: bool,
) -> Result<Vec<SpanCandidate<S>>, ModelError> {
    let tape = Tape::record(params, sentence, features, use_gcn)?;
    let spans = enumerate_spans(sentence.len(), params.config.max_span_len);
    let logits = span_logits(tape.z(), &spans, params)?;
    Ok(candidates_from_logits(&spans, &logits))
}

/// Per-token `(P_I, P_O)` from the baseline head.
pub fn token_baseline_forward<S: Scalar>(
    sentence: &AnnotatedSentence,
    params: &ModelParameters<S>,
    features: Option<ArrayView2<'_, S>>,
) -> Result<Vec<(S, S)>, ModelError> {
    let tape = Tape::record(params, sentence, features, params.config.use_gcn)?;
    Ok(token_logits(tape.z(), params)
        .rows()
        .into_iter()
        .map(|l| softmax2(l[0], l[1]))
        .collect())
}

/// Baseline logits, one `[I, O]` row per token.
pub fn token_baseline_scores<S: Scalar>(
    sentence: &AnnotatedSentence,
    params: &ModelParameters<S>,
    features: Option<ArrayView2<'_, S>>,
) -> Result<Array2<S>, ModelError> {
    let tape = Tape::record(params, sentence, features, params.config.use_gcn)?;
    Ok(token_logits(tape.z(), params))
}
