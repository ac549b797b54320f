//! Disfluency detection as span classification over utterance transcripts.
//!
//! Token encodings are fused with dependency-tree structure through a gated
//! graph convolution, every span up to a maximum length is classified as
//! disfluent (`I`) or fluent (`O`), and overlapping positive spans are
//! resolved greedily by probability.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool.

pub mod corpus;
pub mod eval;
pub mod graph;
pub mod model;
pub mod scalar;
pub mod spans;
pub mod synth;
pub mod train;

pub use corpus::{AnnotatedSentence, GoldSpan, Span, TokenLabel};
pub use scalar::Scalar;
pub use spans::SpanCandidate;

/// Double-precision model, used for training, gradient checks and checkpoints by default.
pub type Model = model::ModelParameters<f64>;
/// Single-precision model.
pub type Model32 = model::ModelParameters<f32>;
