//! Exact computer algebra for permutation-twisted modules of tensor powers of
//! a vertex operator algebra, realized on the rank-one free boson.

pub mod error;
pub mod scalars;
pub mod series;
pub mod derivation;
pub mod heisenberg;
pub mod delta;
pub mod twist;
pub mod permutation;
pub mod verify;

pub use delta::{delta_apply, delta_inverse_apply, DeltaExpansion};
pub use derivation::{solve_a_coeffs, DerivCoeffs};
pub use error::{Error, Result};
pub use heisenberg::{FockVector, LinComb, ModeMatrix, Partition};
pub use permutation::{assemble, decompose, twisted_character, AssembledModule, CharTerm, CycleDecomposition, Permutation};
pub use scalars::{Cyclotomic, Rational, Scalar};
pub use series::{Residual, Series};
pub use twist::{TensorState, TwistedModule, UFunctor};
pub use verify::{run_suite, VerifyOptions, VerifyReport};
