use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use crate::corpus::AnnotatedSentence;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Trainable embedding table plus width-3 ReLU mixer.
    Desk,
    /// Encodings supplied per sentence from a sidecar file.
    Precomputed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Token embedding width.
    pub embed_dim: usize,
    /// Contextual and graph encoding width `d`.
    pub hidden_dim: usize,
    /// Span length embedding width.
    pub length_dim: usize,
    /// Longest span enumerated, in tokens.
    pub max_span_len: usize,
    pub gcn_layers: usize,
    pub use_gcn: bool,
    pub directed_arcs: bool,
    pub encoder: EncoderKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 32,
            hidden_dim: 32,
            length_dim: 8,
            max_span_len: 6,
            gcn_layers: 2,
            use_gcn: true,
            directed_arcs: false,
            encoder: EncoderKind::Desk,
        }
    }
}

impl ModelConfig {
    pub fn span_dim(&self) -> usize {
        4 * self.hidden_dim + self.length_dim
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.length_dim == 0 {
            return Err("embed_dim, hidden_dim and length_dim must be positive".into());
        }
        if self.max_span_len == 0 {
            return Err("max_span_len must be at least 1".into());
        }
        Ok(())
    }
}

/// Every learnable tensor. Also used for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<S> {
    /// `V x d_e`
    pub embeddings: Array2<S>,
    /// `3 d_e x d`, applied to `[e_{t-1}; e_t; e_{t+1}]`
    pub mixer_w: Array2<S>,
    pub mixer_b: Array1<S>,
    /// `d x d` per layer
    pub gcn_w: Vec<Array2<S>>,
    pub gcn_b: Vec<Array1<S>>,
    /// `2d x d`, applied to `[h_t; g_t]`
    pub gate_w: Array2<S>,
    pub gate_b: Array1<S>,
    /// `L x d_len`; row `k - 1` embeds length `k`
    pub length_table: Array2<S>,
    /// `2 x (4d + d_len)`; row 0 is class I, row 1 class O
    pub prototypes: Array2<S>,
    /// `2 x 2d` token classifier
    pub baseline_w: Array2<S>,
    pub baseline_b: Array1<S>,
}

impl<S: Scalar> ParamSet<S> {
    pub fn zeros(config: &ModelConfig, vocab_size: usize) -> Self {
        let (de, d) = (config.embed_dim, config.hidden_dim);
        ParamSet {
            embeddings: Array2::zeros((vocab_size, de)),
            mixer_w: Array2::zeros((3 * de, d)),
            mixer_b: Array1::zeros(d),
            gcn_w: (0..config.gcn_layers)
                .map(|_| Array2::zeros((d, d)))
                .collect(),
            gcn_b: (0..config.gcn_layers).map(|_| Array1::zeros(d)).collect(),
            gate_w: Array2::zeros((2 * d, d)),
            gate_b: Array1::zeros(d),
            length_table: Array2::zeros((config.max_span_len, config.length_dim)),
            prototypes: Array2::zeros((2, config.span_dim())),
            baseline_w: Array2::zeros((2, 2 * d)),
            baseline_b: Array1::zeros(2),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<S>| Array2::zeros(a.raw_dim());
        let z1 = |a: &Array1<S>| Array1::zeros(a.raw_dim());
        ParamSet {
            embeddings: z2(&self.embeddings),
            mixer_w: z2(&self.mixer_w),
            mixer_b: z1(&self.mixer_b),
            gcn_w: self.gcn_w.iter().map(z2).collect(),
            gcn_b: self.gcn_b.iter().map(z1).collect(),
            gate_w: z2(&self.gate_w),
            gate_b: z1(&self.gate_b),
            length_table: z2(&self.length_table),
            prototypes: z2(&self.prototypes),
            baseline_w: z2(&self.baseline_w),
            baseline_b: z1(&self.baseline_b),
        }
    }

    /// Draws every coordinate from `uniform(-scale, scale)` in [`ParamSet::named`] order.
    pub fn fill_uniform<R: Rng>(&mut self, rng: &mut R, scale: f64) {
        for (_, mut t) in self.named_mut() {
            for v in t.iter_mut() {
                *v = S::of(rng.gen_range(-scale..scale));
            }
        }
    }

    /// Tensors in a fixed canonical order with stable names.
    pub fn named(&self) -> Vec<(String, ArrayViewD<'_, S>)> {
        let mut out = vec![
            ("embeddings".to_string(), self.embeddings.view().into_dyn()),
            ("mixer.weight".to_string(), self.mixer_w.view().into_dyn()),
            ("mixer.bias".to_string(), self.mixer_b.view().into_dyn()),
        ];
        for (l, (w, b)) in self.gcn_w.iter().zip(&self.gcn_b).enumerate() {
            out.push((format!("gcn.{l}.weight"), w.view().into_dyn()));
            out.push((format!("gcn.{l}.bias"), b.view().into_dyn()));
        }
        out.extend([
            ("gate.weight".to_string(), self.gate_w.view().into_dyn()),
            ("gate.bias".to_string(), self.gate_b.view().into_dyn()),
            (
                "length_table".to_string(),
                self.length_table.view().into_dyn(),
            ),
            ("prototypes".to_string(), self.prototypes.view().into_dyn()),
            (
                "baseline.weight".to_string(),
                self.baseline_w.view().into_dyn(),
            ),
            (
                "baseline.bias".to_string(),
                self.baseline_b.view().into_dyn(),
            ),
        ]);
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, S>)> {
        let mut out = vec![
            (
                "embeddings".to_string(),
                self.embeddings.view_mut().into_dyn(),
            ),
            (
                "mixer.weight".to_string(),
                self.mixer_w.view_mut().into_dyn(),
            ),
            ("mixer.bias".to_string(), self.mixer_b.view_mut().into_dyn()),
        ];
        for (l, (w, b)) in self.gcn_w.iter_mut().zip(self.gcn_b.iter_mut()).enumerate() {
            out.push((format!("gcn.{l}.weight"), w.view_mut().into_dyn()));
            out.push((format!("gcn.{l}.bias"), b.view_mut().into_dyn()));
        }
        out.extend([
            ("gate.weight".to_string(), self.gate_w.view_mut().into_dyn()),
            ("gate.bias".to_string(), self.gate_b.view_mut().into_dyn()),
            (
                "length_table".to_string(),
                self.length_table.view_mut().into_dyn(),
            ),
            (
                "prototypes".to_string(),
                self.prototypes.view_mut().into_dyn(),
            ),
            (
                "baseline.weight".to_string(),
                self.baseline_w.view_mut().into_dyn(),
            ),
            (
                "baseline.bias".to_string(),
                self.baseline_b.view_mut().into_dyn(),
            ),
        ]);
        out
    }

    pub fn num_values(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn scale(&mut self, factor: S) {
        for (_, mut t) in self.named_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.named()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Largest absolute coordinate difference, for test comparisons.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.named()
            .iter()
            .zip(other.named())
            .flat_map(|((_, a), (_, b))| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| (*x - *y).abs())
                    .collect::<Vec<_>>()
            })
            .fold(S::zero(), S::max)
    }
}

/// Configuration, vocabulary and weights of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters<S> {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub weights: ParamSet<S>,
}

impl<S: Scalar> ModelParameters<S> {
    /// All weights zero.
    pub fn zeros(config: ModelConfig, vocab: Vocab) -> Self {
        let weights = ParamSet::zeros(&config, vocab.len());
        ModelParameters {
            config,
            vocab,
            weights,
        }
    }

    /// Weights drawn from `uniform(-0.1, 0.1)`.
    pub fn init<R: Rng>(config: ModelConfig, vocab: Vocab, rng: &mut R) -> Self {
        let mut p = Self::zeros(config, vocab);
        p.weights.fill_uniform(rng, 0.1);
        p
    }

    /// Builds the vocabulary from `corpus` and initializes randomly.
    pub fn for_corpus<R: Rng>(
        config: ModelConfig,
        corpus: &[AnnotatedSentence],
        rng: &mut R,
    ) -> Self {
        Self::init(config, Vocab::from_corpus(corpus), rng)
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig {
            embed_dim: 3,
            hidden_dim: 4,
            length_dim: 2,
            max_span_len: 5,
            ..ModelConfig::default()
        };
        let p = ParamSet::<f64>::zeros(&cfg, 7);
        assert_eq!(p.embeddings.dim(), (7, 3));
        assert_eq!(p.mixer_w.dim(), (9, 4));
        assert_eq!(p.gcn_w.len(), 2);
        assert_eq!(p.gate_w.dim(), (8, 4));
        assert_eq!(p.length_table.dim(), (5, 2));
        assert_eq!(p.prototypes.dim(), (2, 18));
        assert_eq!(p.baseline_w.dim(), (2, 8));
        let names: Vec<String> = p.named().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 13);
        assert_eq!(names[3], "gcn.0.weight");
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = ModelConfig::default();
        let a = ParamSet::<f64>::zeros(&cfg, 5);
        let mut b = a.clone();
        let mut c = a.clone();
        b.fill_uniform(&mut ChaCha8Rng::seed_from_u64(3), 0.1);
        c.fill_uniform(&mut ChaCha8Rng::seed_from_u64(3), 0.1);
        assert_eq!(b, c);
        assert!(b
            .named()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.abs() < 0.1)));
    }
}
