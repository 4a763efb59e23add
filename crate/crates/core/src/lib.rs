//! Dyadic harmonic analysis on the real line.
//!
//! Everything here is built on the standard dyadic grid
//! `{[n 2^k, (n + 1) 2^k) : k, n ∈ ℤ}` and its Haar basis. Functions are held
//! either as finite Haar expansions ([`HaarSeries`]) or as compactly supported
//! dyadic step functions ([`StepFunction`]); the two are interconvertible and
//! products of series live naturally in the step form.
//!
//! On top of that sit the fractional derivative and integral
//! ([`operators`]), the Sobolev, Lebesgue and BMO norms ([`norms`]), the
//! Haar expansion of squares ([`algebra`]), the explicit counterexample towers
//! ([`counterexamples`]) and randomized checks of the three embedding
//! inequalities ([`embeddings`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// NaN must fail the range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod counterexamples;
pub mod dyadic;
pub mod embeddings;
mod error;
pub mod fit;
pub mod math;
pub mod norms;
pub mod operators;
pub mod series;
pub mod verify;

pub use dyadic::{DyadicInterval, DyadicPoint, Relation, Tree, K_MAX, K_MIN};
pub use error::{Error, Result};
pub use operators::FractionalParameter;
pub use series::{HaarSeries, StepAnalysis, StepFunction, TreeSummary};
