//! Forward pass with every intermediate kept, and its hand-derived backward pass.

use ndarray::{s, Array2, ArrayView2, Axis};

use super::encoder::{affine_relu, check_features, context_windows};
use super::gate::{fuse, without_graph};
use super::gcn::{propagate, LayerCache};
use super::{EncoderKind, ModelError, ModelParameters, ParamSet};
use crate::corpus::AnnotatedSentence;
use crate::graph::build_adjacency_with;
use crate::scalar::Scalar;

struct DeskCache<S> {
    ids: Vec<usize>,
    windows: Array2<S>,
    pre: Array2<S>,
}

struct GraphCache<S> {
    adjacency: Array2<S>,
    layers: Vec<LayerCache<S>>,
    output: Array2<S>,
    gate_in: Array2<S>,
    gate: Array2<S>,
}

/// The token-level forward pass of one sentence up to the fused encoding.
pub struct Tape<S> {
    desk: Option<DeskCache<S>>,
    graph: Option<GraphCache<S>>,
    h: Array2<S>,
    z: Array2<S>,
}

fn relu_mask<S: Scalar>(upstream: &Array2<S>, pre: &Array2<S>) -> Array2<S> {
    let mut out = upstream.clone();
    out.zip_mut_with(pre, |g, &p| {
        if p <= S::zero() {
            *g = S::zero();
        }
    });
    out
}

impl<S: Scalar> Tape<S> {
    /// Runs encoder, graph layers and gate. `use_gcn = false` yields `Z = [H, 0]`.
    pub fn record(
        params: &ModelParameters<S>,
        sentence: &AnnotatedSentence,
        features: Option<ArrayView2<'_, S>>,
        use_gcn: bool,
    ) -> Result<Self, ModelError> {
        let w = &params.weights;
        let cfg = &params.config;
        let (desk, h) = match cfg.encoder {
            EncoderKind::Desk => {
                let ids = params.vocab.ids(&sentence.tokens);
                let windows = context_windows(&w.embeddings, &ids);
                let (pre, h) = affine_relu(&windows, &w.mixer_w, &w.mixer_b);
                (Some(DeskCache { ids, windows, pre }), h)
            }
            EncoderKind::Precomputed => {
                let block = features.ok_or(ModelError::MissingFeatures(0))?;
                check_features(block, sentence.len(), cfg.hidden_dim)?;
                (None, block.to_owned())
            }
        };
        if !use_gcn {
            let z = without_graph(&h);
            return Ok(Tape {
                desk,
                graph: None,
                h,
                z,
            });
        }
        let adjacency = build_adjacency_with::<S>(&sentence.heads, cfg.directed_arcs)?
            .matrix()
            .clone();
        let (layers, output) = propagate(&h, &adjacency, &w.gcn_w, &w.gcn_b);
        let (gate_in, gate, z) = fuse(&h, &output, &w.gate_w, &w.gate_b);
        Ok(Tape {
            desk,
            graph: Some(GraphCache {
                adjacency,
                layers,
                output,
                gate_in,
                gate,
            }),
            h,
            z,
        })
    }

    /// Contextual encodings `H`.
    pub fn h(&self) -> &Array2<S> {
        &self.h
    }

    /// Fused encodings `Z`.
    pub fn z(&self) -> &Array2<S> {
        &self.z
    }

    /// Graph encodings after the last layer, when the graph branch ran.
    pub fn graph(&self) -> Option<&Array2<S>> {
        self.graph.as_ref().map(|g| &g.output)
    }

    pub fn gate(&self) -> Option<&Array2<S>> {
        self.graph.as_ref().map(|g| &g.gate)
    }

    pub fn len(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.h.nrows() == 0
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to `Z` is `d_z`.
    pub fn backward(&self, params: &ModelParameters<S>, d_z: &Array2<S>, grads: &mut ParamSet<S>) {
        let w = &params.weights;
        let d = self.h.ncols();
        let mut d_h = d_z.slice(s![.., ..d]).to_owned();

        if let Some(gc) = &self.graph {
            let d_fused = d_z.slice(s![.., d..]);
            // Z[:, d..] = gate * G
            let d_gate = &d_fused * &gc.output;
            let mut d_g = &d_fused * &gc.gate;
            let d_gate_pre = d_gate * &gc.gate.mapv(|v| v * (S::one() - v));
            grads.gate_w += &gc.gate_in.t().dot(&d_gate_pre);
            grads.gate_b += &d_gate_pre.sum_axis(Axis(0));
            let d_u = d_gate_pre.dot(&w.gate_w.t());
            d_h += &d_u.slice(s![.., ..d]);
            d_g += &d_u.slice(s![.., d..]);

            for (l, layer) in gc.layers.iter().enumerate().rev() {
                let d_pre = relu_mask(&d_g, &layer.pre);
                grads.gcn_w[l] += &layer.aggregated.t().dot(&d_pre);
                grads.gcn_b[l] += &d_pre.sum_axis(Axis(0));
                d_g = gc.adjacency.t().dot(&d_pre.dot(&w.gcn_w[l].t()));
            }
            d_h += &d_g;
        }

        if let Some(dc) = &self.desk {
            let d_pre = relu_mask(&d_h, &dc.pre);
            grads.mixer_w += &dc.windows.t().dot(&d_pre);
            grads.mixer_b += &d_pre.sum_axis(Axis(0));
            let d_x = d_pre.dot(&w.mixer_w.t());
            let de = w.embeddings.ncols();
            let t = dc.ids.len();
            for (i, &id) in dc.ids.iter().enumerate() {
                let mut row = grads.embeddings.row_mut(id);
                row += &d_x.slice(s![i, de..2 * de]);
                if i + 1 < t {
                    row += &d_x.slice(s![i + 1, 0..de]);
                }
                if i > 0 {
                    row += &d_x.slice(s![i - 1, 2 * de..3 * de]);
                }
            }
        }
    }
}
