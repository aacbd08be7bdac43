//! Exact-arithmetic laboratory for anonymous predictors and smooth glue maps.
//!
//! The crate has two halves that meet in the CLI:
//!
//! * an exact side — rational arithmetic, a group of increasing
//!   homeomorphisms ([`homeo`]), a countable universe of step functions with a
//!   constructive wellorder ([`step`]), and the predictors built on top of it
//!   ([`predictor`]);
//! * a certified-numeric side — bump functions with symbolic derivatives
//!   ([`bump`]), adaptive quadrature ([`quad`]), glue-map transition pieces and
//!   diffeomorphism assembly ([`glue`]), and the blocking family explorer
//!   ([`family`]).
//!
//! Randomized verification suites with explicit seeds live in [`suite`].

// Errors and reports carry exact rationals so diagnostics replay verbatim;
// they are cold paths, not worth boxing for the size-based lints.
#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod bump;
pub mod family;
pub mod glue;
pub mod homeo;
pub mod predictor;
pub mod quad;
pub mod rational;
pub mod step;
pub mod suite;

pub use rational::Rational;
