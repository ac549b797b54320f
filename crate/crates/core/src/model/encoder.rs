use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{ContextualEncoding, EncoderKind, ModelError, ModelParameters};
use crate::corpus::AnnotatedSentence;
use crate::scalar::{relu, Scalar};

/// Row `t` is `[e_{t-1}; e_t; e_{t+1}]`, zero-padded at both ends.
pub(crate) fn context_windows<S: Scalar>(embeddings: &Array2<S>, ids: &[usize]) -> Array2<S> {
    let de = embeddings.ncols();
    let t = ids.len();
    let mut x = Array2::zeros((t, 3 * de));
    for (i, &id) in ids.iter().enumerate() {
        let e = embeddings.row(id);
        x.slice_mut(s![i, de..2 * de]).assign(&e);
        if i + 1 < t {
            x.slice_mut(s![i + 1, 0..de]).assign(&e);
        }
        if i > 0 {
            x.slice_mut(s![i - 1, 2 * de..3 * de]).assign(&e);
        }
    }
    x
}

/// Affine map followed by ReLU; returns (pre-activation, activation).
pub(crate) fn affine_relu<S: Scalar>(
    x: &Array2<S>,
    w: &Array2<S>,
    b: &Array1<S>,
) -> (Array2<S>, Array2<S>) {
    let pre = x.dot(w) + b;
    let act = pre.mapv(relu);
    (pre, act)
}

pub(crate) fn check_features<S: Scalar>(
    block: ArrayView2<'_, S>,
    tokens: usize,
    dim: usize,
) -> Result<(), ModelError> {
    if block.dim() != (tokens, dim) {
        return Err(ModelError::FeatureShape {
            rows: block.nrows(),
            cols: block.ncols(),
            tokens,
            dim,
        });
    }
    if block.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Sidecar("non-finite precomputed feature".into()));
    }
    Ok(())
}

/// Contextual encodings `h_t = ReLU(W_c^T [e_{t-1}; e_t; e_{t+1}] + b_c)`.
///
/// In precomputed mode `features` must hold one `T x d` block and is
/// returned as-is; the embedding table and mixer are bypassed.
pub fn encode_tokens<S: Scalar>(
    sentence: &AnnotatedSentence,
    params: &ModelParameters<S>,
    features: Option<ArrayView2<'_, S>>,
) -> Result<ContextualEncoding<S>, ModelError> {
    match params.config.encoder {
        EncoderKind::Precomputed => {
            let block = features.ok_or(ModelError::MissingFeatures(0))?;
            check_features(block, sentence.len(), params.config.hidden_dim)?;
            Ok(ContextualEncoding(block.to_owned()))
        }
        EncoderKind::Desk => {
            let ids = params.vocab.ids(&sentence.tokens);
            let w = &params.weights;
            let x = context_windows(&w.embeddings, &ids);
            let (_, h) = affine_relu(&x, &w.mixer_w, &w.mixer_b);
            Ok(ContextualEncoding(h))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SidecarRecord {
    index: usize,
    vectors: Vec<Vec<f64>>,
}

/// Per-sentence `T x d` encoder outputs, keyed by sentence index.
///
/// Stored as JSON Lines, one `{"index": i, "vectors": [[...], ...]}` per sentence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrecomputedEmbeddings<S> {
    blocks: BTreeMap<usize, Array2<S>>,
}

impl<S: Scalar> PrecomputedEmbeddings<S> {
    pub fn new() -> Self {
        PrecomputedEmbeddings {
            blocks: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, index: usize, block: Array2<S>) {
        self.blocks.insert(index, block);
    }

    pub fn get(&self, index: usize) -> Option<&Array2<S>> {
        self.blocks.get(&index)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| ModelError::Sidecar(format!("{}: {e}", path.display())))?;
        let mut out = Self::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| ModelError::Sidecar(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SidecarRecord = serde_json::from_str(&line)
                .map_err(|e| ModelError::Sidecar(format!("line {}: {e}", i + 1)))?;
            let rows = rec.vectors.len();
            let cols = rec.vectors.first().map_or(0, Vec::len);
            if rec.vectors.iter().any(|r| r.len() != cols) {
                return Err(ModelError::Sidecar(format!(
                    "line {}: ragged feature block",
                    i + 1
                )));
            }
            let flat: Vec<S> = rec.vectors.into_iter().flatten().map(S::of).collect();
            let block = Array2::from_shape_vec((rows, cols), flat)
                .map_err(|e| ModelError::Sidecar(e.to_string()))?;
            out.insert(rec.index, block);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let io = |e: std::io::Error| ModelError::Sidecar(e.to_string());
        let mut w = BufWriter::new(File::create(path.as_ref()).map_err(io)?);
        for (&index, block) in &self.blocks {
            let rec = SidecarRecord {
                index,
                vectors: block
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|v| v.as_f64()).collect())
                    .collect(),
            };
            serde_json::to_writer(&mut w, &rec).map_err(|e| ModelError::Sidecar(e.to_string()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, Vocab};
    use crate::synth::fluent_sentence;
    use ndarray::array;

    fn tiny(de: usize, d: usize) -> ModelParameters<f64> {
        let cfg = ModelConfig {
            embed_dim: de,
            hidden_dim: d,
            length_dim: 1,
            max_span_len: 3,
            ..ModelConfig::default()
        };
        ModelParameters::zeros(cfg, Vocab::from(vec!["w".to_string()]))
    }

    #[test]
    fn zero_mixer_gives_zero_encoding() {
        let mut p = tiny(2, 3);
        p.weights.embeddings.fill(1.0);
        let s = fluent_sentence(vec!["w".into(), "x".into()]);
        let h = encode_tokens(&s, &p, None).unwrap();
        assert_eq!(h.0, Array2::<f64>::zeros((2, 3)));
    }

    #[test]
    fn single_token_sees_zero_padding() {
        let x = context_windows(&array![[0.0], [5.0]], &[1]);
        assert_eq!(x, array![[0.0, 5.0, 0.0]]);
    }

    #[test]
    fn hand_evaluated_mixer() {
        let mut p = tiny(1, 1);
        // row 1 is "w"
        p.weights.embeddings = array![[0.0], [2.0]];
        p.weights.mixer_w = array![[1.0], [1.0], [1.0]];
        let s = fluent_sentence(vec!["w".into(), "w".into()]);
        let h = encode_tokens(&s, &p, None).unwrap();
        assert_eq!(h.0, array![[4.0], [4.0]]);
    }

    #[test]
    fn precomputed_checks_shape() {
        let mut p = tiny(2, 3);
        p.config.encoder = EncoderKind::Precomputed;
        let s = fluent_sentence(vec!["w".into(), "w".into()]);
        let ok = Array2::from_elem((2, 3), 0.5);
        assert_eq!(encode_tokens(&s, &p, Some(ok.view())).unwrap().0, ok);
        let bad = Array2::from_elem((3, 3), 0.5);
        assert!(matches!(
            encode_tokens(&s, &p, Some(bad.view())),
            Err(ModelError::FeatureShape { .. })
        ));
        let bad_d = Array2::from_elem((2, 2), 0.5);
        assert!(encode_tokens(&s, &p, Some(bad_d.view())).is_err());
        assert!(matches!(
            encode_tokens(&s, &p, None),
            Err(ModelError::MissingFeatures(_))
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feats.jsonl");
        let mut f = PrecomputedEmbeddings::<f64>::new();
        f.insert(0, array![[0.1, -2.5], [3.0, 1e-3]]);
        f.insert(4, array![[7.0, 8.0]]);
        f.save(&path).unwrap();
        assert_eq!(PrecomputedEmbeddings::load(&path).unwrap(), f);
    }
}
