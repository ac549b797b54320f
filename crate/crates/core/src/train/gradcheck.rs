//! Central finite-difference verification of the analytic gradients.

use ndarray::ArrayView2;

use super::loss::{loss_and_gradient, sentence_loss, Objective};
use crate::corpus::AnnotatedSentence;
use crate::model::{ModelError, ModelParameters, ParamSet};
use crate::scalar::Scalar;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// max over coordinates of `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`
    pub max_relative_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub checked: usize,
    /// Coordinates where both gradients are exactly zero.
    pub skipped: usize,
}

/// Compares the backward pass against central differences on every parameter.
pub fn gradient_check<S: Scalar>(
    params: &ModelParameters<S>,
    sentence: &AnnotatedSentence,
    features: Option<ArrayView2<'_, S>>,
    objective: Objective,
    class_weight_i: S,
) -> Result<GradCheckReport, ModelError> {
    gradient_check_with(params, sentence, features, objective, class_weight_i, |p| {
        loss_and_gradient(p, sentence, features, objective, class_weight_i).map(|(_, g)| g)
    })
}

/// [`gradient_check`] against an arbitrary analytic gradient.
pub fn gradient_check_with<S, F>(
    params: &ModelParameters<S>,
    sentence: &AnnotatedSentence,
    features: Option<ArrayView2<'_, S>>,
    objective: Objective,
    class_weight_i: S,
    analytic: F,
) -> Result<GradCheckReport, ModelError>
where
    S: Scalar,
    F: FnOnce(&ModelParameters<S>) -> Result<ParamSet<S>, ModelError>,
{
    let grads = analytic(params)?;
    let mean_loss = |p: &ModelParameters<S>| -> Result<f64, ModelError> {
        let l = sentence_loss(p, sentence, features, objective, class_weight_i, None)?;
        Ok(l.sum.as_f64() / l.count.max(1) as f64)
    };

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        checked: 0,
        skipped: 0,
    };
    let h = S::of(FD_STEP);
    let names: Vec<String> = grads.named().into_iter().map(|(n, _)| n).collect();
    let analytic_values: Vec<Vec<S>> = grads
        .named()
        .into_iter()
        .map(|(_, t)| t.iter().copied().collect())
        .collect();

    for (ti, name) in names.iter().enumerate() {
        for (k, g_a) in analytic_values[ti].iter().enumerate() {
            let original = slot(&mut probe.weights, ti, k);
            set_slot(&mut probe.weights, ti, k, original + h);
            let plus = mean_loss(&probe)?;
            set_slot(&mut probe.weights, ti, k, original - h);
            let minus = mean_loss(&probe)?;
            set_slot(&mut probe.weights, ti, k, original);

            let g_a = g_a.as_f64();
            let g_n = (plus - minus) / (2.0 * FD_STEP);
            if g_a == 0.0 && g_n == 0.0 {
                report.skipped += 1;
                continue;
            }
            report.checked += 1;
            let rel = (g_a - g_n).abs() / (g_a.abs() + g_n.abs()).max(1e-8);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst_tensor = name.clone();
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}

fn slot<S: Scalar>(p: &mut ParamSet<S>, tensor: usize, k: usize) -> S {
    p.named_mut()[tensor]
        .1
        .as_slice_mut()
        .expect("parameter tensors are contiguous")[k]
}

fn set_slot<S: Scalar>(p: &mut ParamSet<S>, tensor: usize, k: usize, value: S) {
    p.named_mut()[tensor]
        .1
        .as_slice_mut()
        .expect("parameter tensors are contiguous")[k] = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenLabel::{I, O};
    use crate::model::{ModelConfig, Vocab};
    use crate::synth::fluent_sentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(use_gcn: bool, seed: u64) -> (ModelParameters<f64>, AnnotatedSentence) {
        let cfg = ModelConfig {
            embed_dim: 4,
            hidden_dim: 4,
            length_dim: 2,
            max_span_len: 3,
            use_gcn,
            ..ModelConfig::default()
        };
        let words: Vec<String> = ["i", "i", "want", "a", "uh", "flight"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let vocab = Vocab::from(words.clone());
        let mut p = ModelParameters::init(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(seed));
        // larger weights keep most ReLUs away from their kink
        p.weights.scale(5.0);
        let mut s = fluent_sentence(words);
        s.labels = vec![I, O, O, O, I, O];
        s.heads = vec![2, 3, 0, 6, 6, 3];
        (p, s)
    }

    #[test]
    fn span_objective_matches_finite_differences() {
        for use_gcn in [true, false] {
            let (p, s) = setup(use_gcn, 11);
            let r = gradient_check(&p, &s, None, Objective::Span, 1.0).unwrap();
            assert!(r.max_relative_error < 1e-4, "gcn={use_gcn}: {r:?}");
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn token_objective_matches_finite_differences() {
        let (p, s) = setup(true, 12);
        let r = gradient_check(&p, &s, None, Objective::Token, 2.0).unwrap();
        assert!(r.max_relative_error < 1e-4, "{r:?}");
    }

    #[test]
    fn flipped_gate_gradient_is_caught() {
        let (p, s) = setup(true, 13);
        let r = gradient_check_with(&p, &s, None, Objective::Span, 1.0, |p| {
            let (_, mut g) = loss_and_gradient(p, &s, None, Objective::Span, 1.0)?;
            g.gate_w.mapv_inplace(|v| -v);
            Ok(g)
        })
        .unwrap();
        assert!(r.max_relative_error > 1e-1, "{r:?}");
        assert_eq!(r.worst_tensor, "gate.weight");
    }

    #[test]
    fn dead_mixer_skips_zero_coordinates() {
        let (mut p, s) = setup(true, 14);
        p.weights.mixer_w.fill(0.0);
        p.weights.mixer_b.fill(-1.0);
        let r = gradient_check(&p, &s, None, Objective::Span, 1.0).unwrap();
        assert!(r.skipped > 0);
        assert!(r.max_relative_error < 1e-4, "{r:?}");
    }
}
