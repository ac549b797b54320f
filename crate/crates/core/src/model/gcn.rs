use ndarray::{Array1, Array2};

use super::{ContextualEncoding, GraphEncoding, ModelError, ModelParameters};
use crate::graph::NormalizedAdjacency;
use crate::scalar::{relu, Scalar};

/// Cached intermediates of one layer: `A G` and the pre-activation `A G W + b`.
pub(crate) struct LayerCache<S> {
    pub aggregated: Array2<S>,
    pub pre: Array2<S>,
}

/// Runs `G <- ReLU(A G W + b)` for every layer, starting from `G = H`.
pub(crate) fn propagate<S: Scalar>(
    h: &Array2<S>,
    adj: &Array2<S>,
    weights: &[Array2<S>],
    biases: &[Array1<S>],
) -> (Vec<LayerCache<S>>, Array2<S>) {
    let mut g = h.clone();
    let mut caches = Vec::with_capacity(weights.len());
    for (w, b) in weights.iter().zip(biases) {
        let aggregated = adj.dot(&g);
        let pre = aggregated.dot(w) + b;
        g = pre.mapv(relu);
        caches.push(LayerCache { aggregated, pre });
    }
    (caches, g)
}

pub fn gcn_forward<S: Scalar>(
    h: &ContextualEncoding<S>,
    adj: &NormalizedAdjacency<S>,
    params: &ModelParameters<S>,
) -> Result<GraphEncoding<S>, ModelError> {
    let (t, d) = h.0.dim();
    if adj.len() != t {
        return Err(ModelError::Shape(format!(
            "adjacency is {0}x{0} but encoding has {t} rows",
            adj.len()
        )));
    }
    if d != params.config.hidden_dim {
        return Err(ModelError::Shape(format!(
            "encoding width {d} != hidden_dim {}",
            params.config.hidden_dim
        )));
    }
    let w = &params.weights;
    let (_, g) = propagate(&h.0, adj.matrix(), &w.gcn_w, &w.gcn_b);
    Ok(GraphEncoding(g))
}
