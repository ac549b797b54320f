//! Seeded synthetic corpora with repetition, restart and repair disfluencies.
//!
//! A fluent backbone is sampled first: tokens drawn uniformly from
//! `w0..w{V-1}` with a left-to-right dependency chain (token 1 is the root,
//! every later token hangs off its predecessor). At most one reparandum is
//! then inserted:
//!
//! * **repetition** copies a backbone span immediately in front of itself,
//! * **restart** prepends `k` fresh tokens,
//! * **repair** duplicates a backbone span, resamples every token of the later
//!   copy, and labels the earlier (original) copy disfluent.
//!
//! Each repetition or repair token attaches to its counterpart in the fluent
//! copy; every restart token attaches to the first fluent token.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedSentence, TokenLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("invalid split ratios {0:?}: need non-negative values summing to 1")]
    InvalidRatios([f64; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeWeights {
    pub repetition: f64,
    pub restart: f64,
    pub repair: f64,
}

impl Default for TypeWeights {
    fn default() -> Self {
        TypeWeights {
            repetition: 0.7,
            restart: 0.15,
            repair: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_sentences: usize,
    pub vocab_size: usize,
    pub len_min: usize,
    pub len_max: usize,
    pub p_disfluent: f64,
    pub type_weights: TypeWeights,
    pub max_reparandum_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_sentences: 3000,
            vocab_size: 50,
            len_min: 5,
            len_max: 12,
            p_disfluent: 0.7,
            type_weights: TypeWeights::default(),
            max_reparandum_len: 3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.p_disfluent) {
            return bad("p_disfluent must lie in [0, 1]");
        }
        if self.len_min < 2 {
            return bad("len_min must be at least 2");
        }
        if self.len_max < self.len_min {
            return bad("len_max must be at least len_min");
        }
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2");
        }
        if self.max_reparandum_len < 1 {
            return bad("max_reparandum_len must be at least 1");
        }
        let w = self.type_weights;
        let ws = [w.repetition, w.restart, w.repair];
        if ws.iter().any(|x| !x.is_finite() || *x < 0.0) || ws.iter().all(|x| *x == 0.0) {
            return bad("type weights must be non-negative and not all zero");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisfluencyKind {
    Repetition,
    Restart,
    Repair,
}

/// A reparandum to insert into a fluent backbone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disfluency {
    pub kind: DisfluencyKind,
    /// 1-indexed backbone position the reparandum is inserted before. For a
    /// restart this is always 1.
    pub before: usize,
    pub tokens: Vec<String>,
}

/// Fluent sentence with a left-to-right head chain.
pub fn fluent_sentence(tokens: Vec<String>) -> AnnotatedSentence {
    let n = tokens.len();
    AnnotatedSentence {
        tokens,
        labels: vec![TokenLabel::O; n],
        heads: (0..n).collect(),
        deprels: None,
    }
}

/// Inserts `d` into a chain-parsed fluent backbone.
pub fn insert_reparandum(backbone: &[String], d: &Disfluency) -> AnnotatedSentence {
    let n = backbone.len();
    let k = d.tokens.len();
    let p = d.before;
    assert!(p >= 1 && p <= n, "insertion point out of range");
    // new position of backbone token b (1-indexed)
    let remap = |b: usize| {
        if b == 0 {
            0
        } else if b < p {
            b
        } else {
            b + k
        }
    };

    let mut tokens = Vec::with_capacity(n + k);
    let mut labels = Vec::with_capacity(n + k);
    let mut heads = Vec::with_capacity(n + k);
    for b in 1..p {
        tokens.push(backbone[b - 1].clone());
        labels.push(TokenLabel::O);
        heads.push(remap(b - 1));
    }
    for (i, tok) in d.tokens.iter().enumerate() {
        tokens.push(tok.clone());
        labels.push(TokenLabel::I);
        heads.push(match d.kind {
            DisfluencyKind::Restart => p + k,
            DisfluencyKind::Repetition | DisfluencyKind::Repair => p + k + i,
        });
    }
    for b in p..=n {
        tokens.push(backbone[b - 1].clone());
        labels.push(TokenLabel::O);
        heads.push(remap(b - 1));
    }
    AnnotatedSentence {
        tokens,
        labels,
        heads,
        deprels: None,
    }
}

fn word(i: usize) -> String {
    format!("w{i}")
}

/// Generates `config.num_sentences` sentences; identical configs give identical corpora.
pub fn generate(config: &SynthConfig) -> Result<Vec<AnnotatedSentence>, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w = config.type_weights;
    let kinds = [
        DisfluencyKind::Repetition,
        DisfluencyKind::Restart,
        DisfluencyKind::Repair,
    ];
    let kind_dist = WeightedIndex::new([w.repetition, w.restart, w.repair])
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let v = config.vocab_size;

    let mut out = Vec::with_capacity(config.num_sentences);
    for _ in 0..config.num_sentences {
        let n = rng.gen_range(config.len_min..=config.len_max);
        let ids: Vec<usize> = (0..n).map(|_| rng.gen_range(0..v)).collect();
        let mut backbone: Vec<String> = ids.iter().map(|&i| word(i)).collect();
        if !rng.gen_bool(config.p_disfluent) {
            out.push(fluent_sentence(backbone));
            continue;
        }
        let kind = kinds[kind_dist.sample(&mut rng)];
        let k = rng.gen_range(1..=config.max_reparandum_len.min(n));
        let d = match kind {
            DisfluencyKind::Restart => Disfluency {
                kind,
                before: 1,
                tokens: (0..k).map(|_| word(rng.gen_range(0..v))).collect(),
            },
            DisfluencyKind::Repetition => {
                let start = rng.gen_range(1..=n - k + 1);
                Disfluency {
                    kind,
                    before: start,
                    tokens: backbone[start - 1..start - 1 + k].to_vec(),
                }
            }
            DisfluencyKind::Repair => {
                let start = rng.gen_range(1..=n - k + 1);
                let original = backbone[start - 1..start - 1 + k].to_vec();
                for t in start - 1..start - 1 + k {
                    // any word but the original
                    let r = rng.gen_range(0..v - 1);
                    backbone[t] = word(if r >= ids[t] { r + 1 } else { r });
                }
                Disfluency {
                    kind,
                    before: start,
                    tokens: original,
                }
            }
        };
        out.push(insert_reparandum(&backbone, &d));
    }
    Ok(out)
}

/// `(train, dev, test)`.
pub type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Seeded shuffle into train/dev/test with sizes `round(ratio * N)` (test takes the rest).
pub fn split<T: Clone>(corpus: &[T], ratios: [f64; 3], seed: u64) -> Result<Splits<T>, SynthError> {
    if corpus.is_empty() {
        return Err(SynthError::EmptyCorpus);
    }
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0)
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SynthError::InvalidRatios(ratios));
    }
    let n = corpus.len();
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_dev = ((ratios[1] * n as f64).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus[i].clone()).collect::<Vec<T>>();
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_dev]),
        pick(&order[n_train + n_dev..]),
    ))
}
