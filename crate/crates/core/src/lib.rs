//! Optimized variable-density sampling for compressed sensing with
//! subsampled unitary matrices.
//!
//! The crate computes local coherences of a unitary matrix with respect to a
//! prior, turns them into optimized Bernoulli inclusion probabilities, draws
//! sampling plans under Bernoulli, with-replacement and without-replacement
//! schemes, and checks the resulting measurement operators empirically
//! (restricted isometry deviation, noise sensitivity, sparse recovery).

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coherence;
pub mod error;
pub mod experiments;
pub mod io;
pub mod operators;
pub mod recovery;
pub mod rng;
pub mod sampling;
pub mod subspace;
pub mod transform;
pub mod weights;

pub use coherence::{CoherenceSource, CoherenceVector};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use subspace::UnionOfSubspaces;
pub use transform::{Field, UnitaryOperator, C64};
pub use weights::WeightVector;
