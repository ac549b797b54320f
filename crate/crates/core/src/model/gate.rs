use ndarray::{concatenate, Array1, Array2, Axis};

use super::{ContextualEncoding, FusedEncoding, GraphEncoding, ModelError, ModelParameters};
use crate::scalar::{sigmoid, Scalar};

/// Returns `([H, G], gate, Z)` with `gate = sigmoid([H, G] W + b)` and
/// `Z = [H, gate * G]`.
pub(crate) fn fuse<S: Scalar>(
    h: &Array2<S>,
    g: &Array2<S>,
    w: &Array2<S>,
    b: &Array1<S>,
) -> (Array2<S>, Array2<S>, Array2<S>) {
    let u = concatenate![Axis(1), *h, *g];
    let gate = (u.dot(w) + b).mapv(sigmoid);
    let z = concatenate![Axis(1), *h, &gate * g];
    (u, gate, z)
}

/// `[H, 0]`, the fused layout with the graph branch switched off.
pub(crate) fn without_graph<S: Scalar>(h: &Array2<S>) -> Array2<S> {
    concatenate![Axis(1), *h, Array2::zeros(h.raw_dim())]
}

pub fn gate_fuse<S: Scalar>(
    h: &ContextualEncoding<S>,
    g: &GraphEncoding<S>,
    params: &ModelParameters<S>,
) -> Result<FusedEncoding<S>, ModelError> {
    if h.0.dim() != g.0.dim() {
        return Err(ModelError::Shape(format!(
            "H is {:?} but G is {:?}",
            h.0.dim(),
            g.0.dim()
        )));
    }
    if h.0.ncols() != params.config.hidden_dim {
        return Err(ModelError::Shape(format!(
            "encoding width {} != hidden_dim {}",
            h.0.ncols(),
            params.config.hidden_dim
        )));
    }
    let (_, gate, z) = fuse(&h.0, &g.0, &params.weights.gate_w, &params.weights.gate_b);
    Ok(FusedEncoding { z, gate })
}
