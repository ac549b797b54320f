use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spandisfl::corpus::{io_tags_to_spans, preprocess, spans_to_io};
use spandisfl::eval::{evaluate, token_prf, Arm, Counts, ScoreMode};
use spandisfl::graph::{build_adjacency, NormalizedAdjacency};
use spandisfl::model::{gcn_forward, ContextualEncoding, ModelConfig, ModelParameters, Vocab};
use spandisfl::scalar::softmax2;
use spandisfl::spans::{decode, enumerate_spans, overlaps};
use spandisfl::synth::{generate, SynthConfig};
use spandisfl::train::span_loss;
use spandisfl::{AnnotatedSentence, Span, SpanCandidate, TokenLabel};

fn labels() -> impl Strategy<Value = Vec<TokenLabel>> {
    prop::collection::vec(prop_oneof![Just(TokenLabel::I), Just(TokenLabel::O)], 1..40)
}

fn candidates() -> impl Strategy<Value = Vec<SpanCandidate<f64>>> {
    (1usize..16, 1usize..6).prop_flat_map(|(t, l)| {
        let n = enumerate_spans(t, l).len();
        prop::collection::vec(0.0f64..1.0, n).prop_map(move |ps| {
            enumerate_spans(t, l)
                .into_iter()
                .zip(ps)
                .map(|(s, p)| SpanCandidate::from_probability(s, p))
                .collect()
        })
    })
}

fn chain(tokens: Vec<String>) -> AnnotatedSentence {
    let n = tokens.len();
    AnnotatedSentence {
        tokens,
        labels: vec![TokenLabel::O; n],
        heads: (0..n).collect(),
        deprels: None,
    }
}

proptest! {
    #[test]
    fn io_span_round_trip(labels in labels()) {
        let spans = io_tags_to_spans(&labels);
        prop_assert_eq!(spans_to_io(&spans, labels.len()).unwrap(), labels);
    }

    #[test]
    fn gold_spans_are_maximal_runs(labels in labels()) {
        let spans = io_tags_to_spans(&labels);
        for w in spans.windows(2) {
            prop_assert!(w[0].end + 1 < w[1].start);
        }
        for s in &spans {
            prop_assert!(s.start == 1 || labels[s.start - 2] == TokenLabel::O);
            prop_assert!(s.end == labels.len() || labels[s.end] == TokenLabel::O);
        }
    }

    #[test]
    fn preprocess_is_idempotent(
        words in prop::collection::vec("[A-Za-z]{0,3}[.,!?'-]?", 1..12)
    ) {
        let s = chain(words);
        if let Ok(once) = preprocess(&s) {
            prop_assert_eq!(preprocess(&once).unwrap(), once.clone());
            once.validate().unwrap();
        }
    }

    #[test]
    fn decode_is_non_overlapping_and_greedy(cands in candidates()) {
        let kept = decode(&cands);
        for (i, a) in kept.iter().enumerate() {
            prop_assert_eq!(a.predicted, TokenLabel::I);
            for b in &kept[i + 1..] {
                prop_assert!(!overlaps(a.span, b.span));
            }
        }
        // a dropped positive span must overlap a kept span at least as probable
        for c in cands.iter().filter(|c| c.predicted == TokenLabel::I) {
            if !kept.iter().any(|k| k.span == c.span) {
                prop_assert!(kept.iter().any(|k| overlaps(k.span, c.span) && k.p_i >= c.p_i));
            }
        }
    }

    #[test]
    fn decode_ignores_candidate_order(cands in candidates(), seed in any::<u64>()) {
        let mut shuffled = cands.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(decode(&cands), decode(&shuffled));
    }

    #[test]
    fn softmax_is_shift_invariant(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3) {
        let (p, q) = softmax2(a, b);
        let (p2, q2) = softmax2(a + c, b + c);
        prop_assert!((p - p2).abs() < 1e-9 && (q - q2).abs() < 1e-9);
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn span_loss_ignores_candidate_order(cands in candidates(), seed in any::<u64>()) {
        let gold: Vec<TokenLabel> = cands
            .iter()
            .map(|c| if c.span.start % 3 == 0 { TokenLabel::I } else { TokenLabel::O })
            .collect();
        let mut pairs: Vec<_> = cands.iter().copied().zip(gold.iter().copied()).collect();
        pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (c2, g2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let a = span_loss(&cands, &gold, 1.0);
        let b = span_loss(&c2, &g2, 1.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn gcn_is_permutation_equivariant(seed in any::<u64>(), t in 1usize..12, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ModelConfig { hidden_dim: d, ..ModelConfig::default() };
        let params = ModelParameters::<f64>::init(cfg, Vocab::from(vec![]), &mut rng);
        let mut order: Vec<usize> = (1..=t).collect();
        order.shuffle(&mut rng);
        let mut heads = vec![0; t];
        for i in 1..t {
            heads[order[i] - 1] = order[rng.gen_range(0..i)];
        }
        let adj: NormalizedAdjacency<f64> = build_adjacency(&heads).unwrap();
        let h = Array2::from_shape_fn((t, d), |_| rng.gen_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..t).collect();
        perm.shuffle(&mut rng);
        let p = Array2::from_shape_fn((t, t), |(i, j)| if perm[i] == j { 1.0 } else { 0.0 });
        let g = gcn_forward(&ContextualEncoding(h.clone()), &adj, &params).unwrap();
        let adj_p = NormalizedAdjacency::from_matrix(p.dot(adj.matrix()).dot(&p.t()));
        let g_p = gcn_forward(&ContextualEncoding(p.dot(&h)), &adj_p, &params).unwrap();
        let diff = (&g_p.0 - &p.dot(&g.0)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(diff <= 1e-9);
    }

    #[test]
    fn synth_sentences_recover_backbone(seed in any::<u64>(), max_rep in 1usize..4) {
        let config = SynthConfig {
            num_sentences: 20,
            vocab_size: 15,
            max_reparandum_len: max_rep,
            p_disfluent: 0.8,
            seed,
            ..SynthConfig::default()
        };
        for s in generate(&config).unwrap() {
            s.validate().unwrap();
            let fluent: Vec<usize> = (0..s.len()).filter(|&i| s.labels[i] == TokenLabel::O).collect();
            prop_assert!(fluent.len() >= config.len_min && fluent.len() <= config.len_max);
            // the fluent tokens still form the left-to-right chain
            for (k, &i) in fluent.iter().enumerate() {
                let expected = if k == 0 { 0 } else { fluent[k - 1] + 1 };
                prop_assert_eq!(s.heads[i], expected);
            }
            for run in s.gold_spans() {
                prop_assert!(run.len() <= max_rep);
            }
            prop_assert!(s.gold_spans().len() <= 1);
        }
    }

    #[test]
    fn token_counts_aggregate_micro(
        pairs in prop::collection::vec((labels(), any::<u64>()), 1..8)
    ) {
        let mut total = Counts::default();
        let mut flat_p = Vec::new();
        let mut flat_g = Vec::new();
        for (gold, seed) in &pairs {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let pred: Vec<TokenLabel> = gold
                .iter()
                .map(|&g| if rng.gen_bool(0.3) { if g == TokenLabel::I { TokenLabel::O } else { TokenLabel::I } } else { g })
                .collect();
            total += token_prf(&pred, gold).unwrap();
            flat_p.extend(pred);
            flat_g.extend(gold.iter().copied());
        }
        let all = token_prf(&flat_p, &flat_g).unwrap();
        prop_assert_eq!(total, all);
        let f1 = all.f1();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(f1 <= all.precision().max(all.recall()) + 1e-15);
    }
}

#[test]
fn corpus_f1_ignores_sentence_order() {
    let data = generate(&SynthConfig {
        num_sentences: 40,
        vocab_size: 10,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let params = ModelParameters::<f64>::for_corpus(
        ModelConfig {
            embed_dim: 4,
            hidden_dim: 4,
            length_dim: 2,
            max_span_len: 3,
            ..ModelConfig::default()
        },
        &data,
        &mut ChaCha8Rng::seed_from_u64(2),
    );
    let mut reversed = data.clone();
    reversed.reverse();
    for arm in Arm::ALL {
        let a = evaluate(&params, (&data).into(), arm, ScoreMode::Token).unwrap();
        let b = evaluate(&params, (&reversed).into(), arm, ScoreMode::Token).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn enumerated_spans_respect_bounds() {
    for t in 1..=12 {
        for l in 1..=12 {
            for s in enumerate_spans(t, l) {
                assert!(s.start >= 1 && s.start <= s.end && s.end <= t && s.len() <= l);
            }
        }
    }
    assert_eq!(
        enumerate_spans(3, 2),
        vec![
            Span::new(1, 1),
            Span::new(2, 2),
            Span::new(3, 3),
            Span::new(1, 2),
            Span::new(2, 3),
        ]
    );
}
