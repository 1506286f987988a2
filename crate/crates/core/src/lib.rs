//! Learning sparse linear functions over prime fields from noisy examples.
//!
//! The library reduces "properly learn a sparse linear function" to
//! "approximate how many variables it depends on".  Everything is built
//! around a simulated example oracle: draws are pairs (a, b) with a uniform
//! over F_q^n and b = f(a) except with probability η, when b is uniform over
//! the other field elements.  A sparsity approximator answers with some D
//! that γ-approximates d(f), the number of nonzero coefficients; the
//! reduction machinery turns such answers into the exact coefficient vector.
//!
//! Module layout, bottom up:
//!
//! - [`field`] — prime-field contexts and element arithmetic
//! - [`linmodel`] — linear functions, γ specifications, oracles, stream
//!   transforms, and the instance file format
//! - [`approx`] — the sparsity-approximator interface plus the planted
//!   cheat, the brute-force baseline, Δ-clamping, and median boosting
//! - [`psi`] — Ψ tables (expected approximator answers per sparsity),
//!   per-target estimation, and gap location
//! - [`sparse_reduction`] — variable classification and coefficient
//!   recovery for targets of known sparsity class
//! - [`full_learner`] — hypothesis selection, the shift and padding
//!   reductions, the noise-rate sweep, and the end-to-end learner

pub mod approx;
pub mod budget;
pub mod error;
pub mod field;
pub mod full_learner;
pub mod linmodel;
pub mod psi;
pub mod seed;
pub mod sparse_reduction;

pub use budget::Budget;
pub use error::Error;
pub use field::FieldCtx;
pub use linmodel::{ExampleOracle, GammaSpec, LabeledExample, LinearFn};

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
