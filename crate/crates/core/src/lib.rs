//! Transport distances, entropy and curvature on finite reversible Markov
//! triples, with numerical checks of the associated functional inequalities.

// `!(x > 0.0)` is the intended NaN-rejecting form throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod harness;
pub mod io;
pub mod line;
pub mod markov;
pub mod models;
pub mod semigroup;
pub mod transport;
pub mod xi;

pub use error::{Error, Result};
pub use markov::{DensityVector, MarkovTriple, ScalarField, TripleDocument};
pub use models::ModelSpec;
pub use semigroup::SpectralCache;
pub use xi::XiFunction;
