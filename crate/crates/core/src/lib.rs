//! Finite-truncation numerics for pairs of commuting isometries: Wold and
//! canonical decompositions, the coupling verdict, the model decomposition of
//! pairs whose coupling is trivial, and spectral-moment diagnostics.

pub mod error;
pub mod hardy;
pub mod moments;
pub mod numlin;
pub mod pairs;
pub mod symbols;
pub mod wold;

pub use error::{Error, Result};
pub use hardy::{GradedOperator, TruncatedSpace};
pub use moments::{BlockModel, ForcingCertificate, MomentMatch};
pub use numlin::{ComplexMatrix, ComplexVector, Subspace};
pub use pairs::{ExamplePair, ModelDecomposition, OperatorPair, PairMode, SlocinskiDecomposition, VerdictReport};
pub use symbols::{MomentSequence, SchurSymbol};
pub use wold::{CanonicalDecomposition, WoldDecomposition};
pub use num_complex::Complex64;
