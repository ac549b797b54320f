//! Weighted cross-entropy objectives and their gradients.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, Span, TokenLabel};
use crate::model::{
    span_logits, span_logits_backward, token_logits, token_logits_backward, ModelError,
    ModelParameters, ParamSet, Tape,
};
use crate::scalar::{log_softmax2, softmax2, Scalar};
use crate::spans::{assign_gold, enumerate_spans, SpanCandidate};

/// Which head is trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Cross-entropy over every enumerated span.
    Span,
    /// Per-token cross-entropy on the baseline head.
    Token,
}

fn class_weight<S: Scalar>(gold: TokenLabel, weight_i: S) -> S {
    match gold {
        TokenLabel::I => weight_i,
        TokenLabel::O => S::one(),
    }
}

/// Mean over candidates of `-w_gold * ln P(gold)`, with `w_I = class_weight_i`
/// and `w_O = 1`. Computed from logits, so it never takes the log of 0.
pub fn span_loss<S: Scalar>(
    candidates: &[SpanCandidate<S>],
    gold: &[TokenLabel],
    class_weight_i: S,
) -> S {
    assert_eq!(candidates.len(), gold.len(), "one gold class per candidate");
    if candidates.is_empty() {
        return S::zero();
    }
    let total = candidates.iter().zip(gold).fold(S::zero(), |acc, (c, &g)| {
        let (lp_i, lp_o) = c.log_probs();
        let lp = if g == TokenLabel::I { lp_i } else { lp_o };
        acc - class_weight(g, class_weight_i) * lp
    });
    total / S::of(candidates.len() as f64)
}

/// Loss summed over the items of one sentence, the number of items, and
/// gold runs the span limit cannot represent.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceLoss<S> {
    pub sum: S,
    pub count: usize,
    pub unreachable: Vec<Span>,
}

/// Sums weighted cross-entropy over rows of `logits` and writes `dSum/dlogits`.
fn weighted_ce<S: Scalar>(logits: &Array2<S>, gold: &[TokenLabel], weight_i: S) -> (S, Array2<S>) {
    let mut sum = S::zero();
    let mut d = Array2::zeros(logits.raw_dim());
    for (r, &g) in gold.iter().enumerate() {
        let (a, b) = (logits[[r, 0]], logits[[r, 1]]);
        let w = class_weight(g, weight_i);
        let (lp_i, lp_o) = log_softmax2(a, b);
        sum -= w * if g == TokenLabel::I { lp_i } else { lp_o };
        let (p_i, p_o) = softmax2(a, b);
        let (y_i, y_o) = if g == TokenLabel::I {
            (S::one(), S::zero())
        } else {
            (S::zero(), S::one())
        };
        d[[r, 0]] = w * (p_i - y_i);
        d[[r, 1]] = w * (p_o - y_o);
    }
    (sum, d)
}

/// Forward and (when `grads` is given) backward pass for one sentence.
///
/// Gradients of the *summed* loss are accumulated; callers divide by the
/// total item count to get the gradient of the mean.
pub fn sentence_loss<S: Scalar>(
    params: &ModelParameters<S>,
    sentence: &AnnotatedSentence,
    features: Option<ArrayView2<'_, S>>,
    objective: Objective,
    class_weight_i: S,
    grads: Option<&mut ParamSet<S>>,
) -> Result<SentenceLoss<S>, ModelError> {
    let tape = Tape::record(params, sentence, features, params.config.use_gcn)?;
    let z = tape.z();
    let (sum, count, unreachable) = match objective {
        Objective::Span => {
            let spans = enumerate_spans(sentence.len(), params.config.max_span_len);
            let gold = assign_gold(&spans, &sentence.labels);
            let logits = span_logits(z, &spans, params)?;
            let (sum, d_logits) = weighted_ce(&logits, &gold.labels, class_weight_i);
            if let Some(g) = grads {
                let d_z = span_logits_backward(z, &spans, &d_logits, params, g);
                tape.backward(params, &d_z, g);
            }
            (sum, gold.labels.len(), gold.unreachable)
        }
        Objective::Token => {
            let logits = token_logits(z, params);
            let (sum, d_logits) = weighted_ce(&logits, &sentence.labels, class_weight_i);
            if let Some(g) = grads {
                let d_z = token_logits_backward(z, &d_logits, params, g);
                tape.backward(params, &d_z, g);
            }
            (sum, sentence.len(), Vec::new())
        }
    };
    Ok(SentenceLoss {
        sum,
        count,
        unreachable,
    })
}

/// Mean loss of one sentence and the gradient of that mean.
pub fn loss_and_gradient<S: Scalar>(
    params: &ModelParameters<S>,
    sentence: &AnnotatedSentence,
    features: Option<ArrayView2<'_, S>>,
    objective: Objective,
    class_weight_i: S,
) -> Result<(S, ParamSet<S>), ModelError> {
    let mut grads = params.weights.zeros_like();
    let l = sentence_loss(
        params,
        sentence,
        features,
        objective,
        class_weight_i,
        Some(&mut grads),
    )?;
    let n = S::of(l.count.max(1) as f64);
    grads.scale(S::one() / n);
    Ok((l.sum / n, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Vocab};
    use crate::synth::fluent_sentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use TokenLabel::{I, O};

    fn c(p_i: f64) -> SpanCandidate<f64> {
        SpanCandidate::from_probability(Span::new(1, 1), p_i)
    }

    #[test]
    fn uniform_loss_is_ln2() {
        let l = span_loss(&[c(0.5), c(0.5), c(0.5)], &[I, O, O], 1.0);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_predictions_drive_loss_to_zero() {
        let mut last = f64::INFINITY;
        for p in [0.6, 0.9, 0.99, 0.999_999] {
            let l = span_loss(&[c(p)], &[I], 1.0);
            assert!(l < last);
            last = l;
        }
        assert!(last < 1e-5);
        let extreme = SpanCandidate::<f64>::from_logits(Span::new(1, 1), 800.0, -800.0);
        let l = span_loss(&[extreme], &[O], 1.0);
        assert!(l.is_finite() && (l - 1600.0).abs() < 1e-9);
    }

    #[test]
    fn hand_computed_mean() {
        // P(gold) = 0.5 and 0.25
        let l = span_loss(&[c(0.5), c(0.75)], &[I, O], 1.0);
        assert!((l - 1.039_720_770_839_917_9).abs() < 1e-12, "{l}");
    }

    #[test]
    fn class_weight_scales_i_terms() {
        let l = span_loss(&[c(0.5), c(0.5)], &[I, O], 3.0);
        assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn sentence_loss_counts_items() {
        let cfg = ModelConfig {
            embed_dim: 2,
            hidden_dim: 2,
            length_dim: 1,
            max_span_len: 2,
            ..ModelConfig::default()
        };
        let vocab = Vocab::from(vec!["a".to_string()]);
        let p = ModelParameters::<f64>::init(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(0));
        let mut s = fluent_sentence(vec!["a".into(); 4]);
        s.labels = vec![I, I, I, O];
        let l = sentence_loss(&p, &s, None, Objective::Span, 1.0, None).unwrap();
        assert_eq!(l.count, 7);
        assert_eq!(l.unreachable, vec![Span::new(1, 3)]);
        let l = sentence_loss(&p, &s, None, Objective::Token, 1.0, None).unwrap();
        assert_eq!(l.count, 4);
    }
}
