//! The differentiable span classifier.
//!
//! Pipeline per sentence: token encoder (embedding plus width-3 ReLU mixer,
//! or precomputed features) → two ReLU graph-convolution layers over the
//! dependency adjacency → sigmoid gate fusing the graph features into the
//! contextual ones → span vectors `[z_b; z_e; len(e-b+1)]` → two-class
//! softmax against learned class prototypes. A token-level classifier head
//! over the same fused features serves as the baseline.

mod encoder;
mod gate;
mod gcn;
mod heads;
mod params;
mod tape;
mod vocab;

use thiserror::Error;

pub use encoder::{encode_tokens, PrecomputedEmbeddings};
pub use gate::gate_fuse;
pub use gcn::gcn_forward;
pub use heads::{
    model_forward, model_forward_with, span_probabilities, span_representation,
    token_baseline_forward, token_baseline_scores,
};
pub(crate) use heads::{span_logits, span_logits_backward, token_logits, token_logits_backward};
pub use params::{EncoderKind, ModelConfig, ModelParameters, ParamSet};
pub use tape::Tape;
pub use vocab::{Vocab, UNK};

use ndarray::{Array1, Array2, ArrayView2};

use crate::corpus::{AnnotatedSentence, Span};
use crate::graph::GraphError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precomputed features missing for sentence {0}")]
    MissingFeatures(usize),
    #[error("precomputed block has {rows}x{cols}, expected {tokens}x{dim}")]
    FeatureShape {
        rows: usize,
        cols: usize,
        tokens: usize,
        dim: usize,
    },
    #[error("span {span:?} longer than the maximum span length {max}")]
    SpanTooLong { span: Span, max: usize },
    #[error("span {span:?} outside a sentence of {len} tokens")]
    SpanOutOfRange { span: Span, len: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("sidecar: {0}")]
    Sidecar(String),
}

/// Row `t` is the contextual encoding `h_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextualEncoding<S>(pub Array2<S>);

/// Row `t` is the graph encoding `g_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphEncoding<S>(pub Array2<S>);

/// Row `t` is `z_t = [h_t ; gate_t * g_t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedEncoding<S> {
    pub z: Array2<S>,
    /// Gate activations, one row per token.
    pub gate: Array2<S>,
}

/// `[z_b ; z_e ; length_table[e - b + 1]]` for one span.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanRepresentation<S> {
    pub span: Span,
    pub vector: Array1<S>,
}

/// Sentences plus optional precomputed encoder features, indexed alike.
#[derive(Clone, Copy, Debug)]
pub struct Examples<'a, S> {
    pub sentences: &'a [AnnotatedSentence],
    pub features: Option<&'a PrecomputedEmbeddings<S>>,
}

impl<'a, S: Scalar> Examples<'a, S> {
    pub fn new(
        sentences: &'a [AnnotatedSentence],
        features: Option<&'a PrecomputedEmbeddings<S>>,
    ) -> Self {
        Examples {
            sentences,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// The sentence at `i` with its feature block, if any was supplied.
    pub fn get(&self, i: usize) -> (&'a AnnotatedSentence, Option<ArrayView2<'a, S>>) {
        let block = self.features.and_then(|f| f.get(i)).map(|b| b.view());
        (&self.sentences[i], block)
    }

    /// Like [`Examples::get`] but fails when the encoder needs features that are absent.
    pub fn input(
        &self,
        i: usize,
        config: &ModelConfig,
    ) -> Result<(&'a AnnotatedSentence, Option<ArrayView2<'a, S>>), ModelError> {
        let (s, f) = self.get(i);
        if config.encoder == EncoderKind::Precomputed && f.is_none() {
            return Err(ModelError::MissingFeatures(i));
        }
        Ok((s, f))
    }
}

impl<'a, S: Scalar> From<&'a [AnnotatedSentence]> for Examples<'a, S> {
    fn from(sentences: &'a [AnnotatedSentence]) -> Self {
        Examples::new(sentences, None)
    }
}

impl<'a, S: Scalar> From<&'a Vec<AnnotatedSentence>> for Examples<'a, S> {
    fn from(sentences: &'a Vec<AnnotatedSentence>) -> Self {
        Examples::new(sentences, None)
    }
}
