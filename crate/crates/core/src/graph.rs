//! Row-normalized dependency adjacency for the graph encoder.

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::find_cycle;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("empty sentence")]
    Empty,
    #[error("head {head} of token {token} is out of range for {len} tokens")]
    HeadOutOfRange {
        token: usize,
        head: usize,
        len: usize,
    },
    #[error("token {0} is its own head")]
    SelfLoop(usize),
    #[error("head cycle through token {0}")]
    Cycle(usize),
}

/// `D^-1 (A + I)` over the dependency arcs of one sentence.
///
/// Every row sums to one and entry `(i, j)` is positive exactly when `i == j`
/// or an arc links the two tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency<S> {
    matrix: Array2<S>,
}

impl<S: Scalar> NormalizedAdjacency<S> {
    pub fn matrix(&self) -> &Array2<S> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Wraps an arbitrary square matrix; no normalization is applied.
    pub fn from_matrix(matrix: Array2<S>) -> Self {
        assert!(matrix.is_square(), "adjacency must be square");
        NormalizedAdjacency { matrix }
    }
}

/// Undirected arcs plus self-loops, row-normalized.
pub fn build_adjacency<S: Scalar>(heads: &[usize]) -> Result<NormalizedAdjacency<S>, GraphError> {
    build_adjacency_with(heads, false)
}

/// With `directed` set, token `t` only aggregates itself and its head.
pub fn build_adjacency_with<S: Scalar>(
    heads: &[usize],
    directed: bool,
) -> Result<NormalizedAdjacency<S>, GraphError> {
    let t = heads.len();
    if t == 0 {
        return Err(GraphError::Empty);
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > t {
            return Err(GraphError::HeadOutOfRange {
                token: i + 1,
                head: h,
                len: t,
            });
        }
        if h == i + 1 {
            return Err(GraphError::SelfLoop(h));
        }
    }
    if let Some(tok) = find_cycle(heads) {
        return Err(GraphError::Cycle(tok));
    }

    let mut m = Array2::<S>::zeros((t, t));
    for i in 0..t {
        m[[i, i]] = S::one();
    }
    for (i, &h) in heads.iter().enumerate() {
        if h == 0 {
            continue;
        }
        m[[i, h - 1]] = S::one();
        if !directed {
            m[[h - 1, i]] = S::one();
        }
    }
    for mut row in m.rows_mut() {
        let degree = row.sum();
        row.mapv_inplace(|v| v / degree);
    }
    Ok(NormalizedAdjacency { matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn close(a: &Array2<f64>, b: &Array2<f64>) -> bool {
        a.shape() == b.shape() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn chain_rows() {
        let a = build_adjacency::<f64>(&[0, 1, 2]).unwrap();
        let third = 1.0 / 3.0;
        let expect = array![[0.5, 0.5, 0.0], [third, third, third], [0.0, 0.5, 0.5]];
        assert!(close(a.matrix(), &expect), "{:?}", a.matrix());
    }

    #[test]
    fn single_token() {
        let a = build_adjacency::<f64>(&[0]).unwrap();
        assert_eq!(a.matrix(), &array![[1.0]]);
    }

    #[test]
    fn dependent_before_head() {
        let a = build_adjacency::<f64>(&[2, 0]).unwrap();
        assert!(close(a.matrix(), &array![[0.5, 0.5], [0.5, 0.5]]));
    }

    #[test]
    fn directed_mode_keeps_only_head_arcs() {
        let a = build_adjacency_with::<f64>(&[0, 1, 2], true).unwrap();
        let expect = array![[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]];
        assert!(close(a.matrix(), &expect));
    }

    #[test]
    fn rejects_bad_heads() {
        assert_eq!(
            build_adjacency::<f64>(&[2, 3, 1]).unwrap_err(),
            GraphError::Cycle(1)
        );
        assert_eq!(
            build_adjacency::<f64>(&[0, 2]).unwrap_err(),
            GraphError::SelfLoop(2)
        );
        assert!(matches!(
            build_adjacency::<f64>(&[0, 9]),
            Err(GraphError::HeadOutOfRange { .. })
        ));
        assert_eq!(build_adjacency::<f64>(&[]).unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn f32_rows_sum_to_one() {
        let a = build_adjacency::<f32>(&[0, 1, 1, 3, 3]).unwrap();
        for row in a.matrix().rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }
}
